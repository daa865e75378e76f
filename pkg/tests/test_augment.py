"""Augmentation tests: relabeling, quad warping/compositing, line rasterization."""

import numpy as np
import pytest

from conftest import blank, grid
from floorline.augment import (
    RectifiedFacade,
    generate_sample,
    rasterize_floor_lines,
    simplify_semantics,
)
from floorline.errors import UnmappedLabel
from floorline.geometry import (
    LabelMask,
    Line5Tuple,
    Point2,
    Quad,
    apply_homography,
    invert_homography,
)

# CMP-style raw codes for the toy mapping test
CMP_TOY = {1: 0, 2: 0, 3: 1, 4: 2, 7: 0, 12: 3}  # background/facade/balcony->other


def _facade(w=8, h=10, orders=(1, 2)) -> RectifiedFacade:
    """Small rectified facade: windows rows per order, shop strip at the bottom."""
    sem = blank(w, h)
    flo = blank(w, h)
    sem[h - 2 :, :] = 3  # shop band
    step = h // (len(orders) + 1)
    for i, order in enumerate(orders):
        row = h - (i + 1) * step - 1
        sem[row - 1, 1 : w - 1] = 1  # windows above each line
        flo[row, :] = order
    return RectifiedFacade(LabelMask.from_array(sem), LabelMask.from_array(flo))


class TestRectifiedFacade:
    def test_rejects_mismatched_dims(self):
        with pytest.raises(ValueError):
            RectifiedFacade(LabelMask.full(4, 4), LabelMask.full(4, 5))

    def test_rejects_orientation_codes_in_semantics(self):
        sem = blank(4, 4)
        sem[0, 0] = 6
        flo = blank(4, 4)
        flo[3, :] = 1
        with pytest.raises(ValueError):
            RectifiedFacade(LabelMask.from_array(sem), LabelMask.from_array(flo))

    def test_rejects_gap_in_floor_orders(self):
        flo = blank(4, 6)
        flo[5, :] = 1
        flo[1, :] = 3  # order 2 missing
        with pytest.raises(ValueError):
            RectifiedFacade(LabelMask.full(4, 6), LabelMask.from_array(flo))

    def test_rejects_inverted_order_heights(self):
        flo = blank(4, 6)
        flo[1, :] = 1
        flo[4, :] = 2  # order 2 sits BELOW order 1
        with pytest.raises(ValueError):
            RectifiedFacade(LabelMask.full(4, 6), LabelMask.from_array(flo))


class TestSimplifySemantics:
    def test_identity_mapping(self):
        mask = grid([[0, 1], [2, 3]])
        assert simplify_semantics(mask, {0: 0, 1: 1, 2: 2, 3: 3}) == mask

    def test_cmp_style_mapping_matches_pixel_oracle(self, rng):
        raw = rng.choice(list(CMP_TOY.keys()), size=(7, 9)).astype(np.uint8)
        out = simplify_semantics(LabelMask.from_array(raw), CMP_TOY)
        for y in range(7):
            for x in range(9):
                assert int(out.labels[y, x]) == CMP_TOY[int(raw[y, x])]

    def test_unmapped_code_rejected(self):
        with pytest.raises(UnmappedLabel) as exc:
            simplify_semantics(grid([[0, 5]]), {0: 0})
        assert exc.value.codes == (5,)

    def test_bad_codomain_rejected(self):
        with pytest.raises(ValueError):
            simplify_semantics(grid([[0]]), {0: 6})


class TestGenerateSample:
    def test_identity_quad_preserves_masks(self):
        # semantic source with no background pixels, so orientation stamping
        # has nothing to overwrite
        sem = np.full((6, 8), 1, dtype=np.uint8)
        sem[4:, :] = 3
        flo = blank(8, 6)
        flo[4, :] = 1
        facade = RectifiedFacade(LabelMask.from_array(sem), LabelMask.from_array(flo))
        quad = Quad.axis_aligned(0, 0, 7, 5, orientation="front")
        sample = generate_sample([(facade, quad)], 8, 6, seed=0)
        assert sample.semantic_mask == facade.semantic_mask
        assert sample.floor_mask == facade.floor_mask
        np.testing.assert_allclose(sample.provenance[0][2].m, np.eye(3), atol=1e-9)

    def test_orientation_stamped_over_background(self):
        facade = _facade()
        quad = Quad.axis_aligned(2, 2, 2 + facade.width - 1, 2 + facade.height - 1, orientation="left")
        sample = generate_sample([(facade, quad)], 16, 16, seed=0)
        sem = sample.semantic_mask.labels
        src = facade.semantic_mask.labels
        region = sem[2 : 2 + facade.height, 2 : 2 + facade.width]
        assert np.all(region[src == 0] == 4)       # background -> left code
        assert np.all(region[src != 0] == src[src != 0])
        outside = np.ones_like(sem, dtype=bool)
        outside[2 : 2 + facade.height, 2 : 2 + facade.width] = False
        assert not np.any(sem[outside])

    def test_disjoint_quads_compose_independently(self):
        fa, fb = _facade(), _facade(orders=(1,))
        qa = Quad.axis_aligned(0, 0, 7, 9, orientation="left")
        qb = Quad.axis_aligned(12, 2, 19, 11, orientation="right")
        both = generate_sample([(fa, qa), (fb, qb)], 24, 16, seed=0)
        only_a = generate_sample([(fa, qa)], 24, 16, seed=0)
        only_b = generate_sample([(fb, qb)], 24, 16, seed=0)
        for attr in ("semantic_mask", "floor_mask"):
            merged = getattr(both, attr).labels
            a = getattr(only_a, attr).labels
            b = getattr(only_b, attr).labels
            np.testing.assert_array_equal(merged[2:12, 12:20], b[2:12, 12:20])
            np.testing.assert_array_equal(merged[0:10, 0:8], a[0:10, 0:8])

    def test_later_facade_overwrites_earlier(self):
        fa, fb = _facade(), _facade(orders=(1,))
        qa = Quad.axis_aligned(0, 0, 7, 9, orientation="left")
        qb = Quad.axis_aligned(4, 0, 11, 9, orientation="right")
        sample = generate_sample([(fa, qa), (fb, qb)], 16, 12, seed=0)
        only_b = generate_sample([(fb, qb)], 16, 12, seed=0)
        np.testing.assert_array_equal(
            sample.semantic_mask.labels[0:10, 4:12], only_b.semantic_mask.labels[0:10, 4:12]
        )

    def test_perspective_pullback_consistency(self):
        """Every warped order-k pixel pulled back through H^-1 lands within
        1 px of an order-k source pixel."""
        facade = _facade(w=12, h=14, orders=(1, 2, 3))
        quad = Quad(
            (Point2(3, 2), Point2(21, 5), Point2(20, 17), Point2(4, 15)), "right"
        )
        sample = generate_sample([(facade, quad)], 26, 20, seed=0)
        _, _, hom = sample.provenance[0]
        hinv = invert_homography(hom)
        src_by_order = {
            k: np.argwhere(facade.floor_mask.labels == k) for k in (1, 2, 3)
        }
        checked = 0
        for y, x in np.argwhere(sample.floor_mask.labels > 0):
            order = int(sample.floor_mask.labels[y, x])
            back = apply_homography(hinv, Point2(float(x), float(y)))
            dists = np.hypot(
                src_by_order[order][:, 1] - back.x, src_by_order[order][:, 0] - back.y
            )
            assert dists.min() <= 1.0 + 1e-9
            checked += 1
        assert checked > 0

    def test_determinism(self):
        facade = _facade()
        quad = Quad.axis_aligned(1, 1, 9, 12, orientation="front")
        a = generate_sample([(facade, quad)], 16, 16, seed=5)
        b = generate_sample([(facade, quad)], 16, 16, seed=5)
        assert a.semantic_mask == b.semantic_mask and a.floor_mask == b.floor_mask

    def test_label_conservation(self):
        facade = _facade(orders=(1, 2))
        quad = Quad((Point2(1, 1), Point2(13, 3), Point2(12, 14), Point2(2, 12)), "front")
        sample = generate_sample([(facade, quad)], 16, 16, seed=0)
        assert sample.floor_mask.label_set() <= facade.floor_mask.label_set() | {0}

    def test_quad_outside_canvas_rejected(self):
        facade = _facade()
        quad = Quad.axis_aligned(0, 0, 30, 30, orientation="front")
        with pytest.raises(ValueError):
            generate_sample([(facade, quad)], 16, 16, seed=0)


class TestRasterizeFloorLines:
    def test_horizontal_band(self):
        mask = rasterize_floor_lines([Line5Tuple(3, 10, 20, 10, 2)], band_px=3, w=30, h=20)
        assert np.all(mask.labels[9:12, 3:21] == 2)
        assert not np.any(mask.labels[:9, :])
        assert not np.any(mask.labels[12:, :])
        assert not np.any(mask.labels[:, :3])
        assert not np.any(mask.labels[:, 21:])

    def test_disjoint_bands_disjoint_labels(self):
        lines = [Line5Tuple(0, 14, 29, 14, 1), Line5Tuple(0, 5, 29, 5, 2)]
        mask = rasterize_floor_lines(lines, band_px=3, w=30, h=20)
        ones = set(map(tuple, np.argwhere(mask.labels == 1)))
        twos = set(map(tuple, np.argwhere(mask.labels == 2)))
        assert ones and twos and not (ones & twos)

    def test_sloped_line_matches_per_column_oracle(self):
        ln = Line5Tuple(2.0, 18.0, 27.0, 6.0, 3)
        band = 3
        mask = rasterize_floor_lines([ln], band_px=band, w=30, h=24)
        for x in range(30):
            for y in range(24):
                if ln.xs <= x <= ln.xe:
                    yx = ln.ys + (ln.ye - ln.ys) * (x - ln.xs) / (ln.xe - ln.xs)
                    member = abs(y - yx) <= band / 2.0
                else:
                    member = False
                assert (int(mask.labels[y, x]) == 3) == member, (x, y)

    def test_band_clipped_at_canvas(self):
        mask = rasterize_floor_lines([Line5Tuple(0, 0, 9, 0, 1)], band_px=3, w=10, h=5)
        assert np.all(mask.labels[0:2, :] == 1)

    def test_band_px_validation(self):
        with pytest.raises(ValueError):
            rasterize_floor_lines([], band_px=0, w=4, h=4)
