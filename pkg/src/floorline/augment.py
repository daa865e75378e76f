"""Synthesize labeled street-view samples by warping rectified facade masks
onto annotated perspective quads.

Only the label channels are produced (semantic + floor masks); there is no
photometric compositing here. Facades are painted in list order, so later
entries overwrite earlier ones where quads overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import UnmappedLabel
from .geometry import (
    MAX_FLOOR_ORDER,
    Homography,
    LabelMask,
    Line5Tuple,
    Quad,
    homography_from_quads,
    inverse_map_grid,
    nearest_index,
)
from .io_formats import CONTEXT_CODES, FLOOR_PALETTE, ORIENTATION_CODE

#: Codes a simplified semantic mask may contain (other/window/door/shop).
SIMPLIFIED_CODES = frozenset({0}) | CONTEXT_CODES


@dataclass(frozen=True, eq=False)
class RectifiedFacade:
    """A front-facing facade: simplified semantics plus floor-line labels.

    The semantic mask carries only {other, window, door, shop} (orientation is
    stamped later, per target quad). Floor orders must form a contiguous run
    1..k and sit higher in the image as the order grows.
    """

    semantic_mask: LabelMask
    floor_mask: LabelMask

    def __post_init__(self):
        sem, flo = self.semantic_mask, self.floor_mask
        if (sem.width, sem.height) != (flo.width, flo.height):
            raise ValueError(
                f"semantic mask is {sem.width}x{sem.height} but floor mask is "
                f"{flo.width}x{flo.height}"
            )
        bad = sorted(sem.label_set() - SIMPLIFIED_CODES)
        if bad:
            raise ValueError(f"semantic mask carries non-simplified codes {bad}")
        FLOOR_PALETTE.validate(flo)
        orders = sorted(flo.label_set() - {0})
        if not orders or orders != list(range(1, orders[-1] + 1)):
            raise ValueError(f"floor orders must form a contiguous run 1..k, got {orders}")
        mean_rows = []
        for order in orders:
            rows = np.nonzero(flo.labels == order)[0]
            mean_rows.append(rows.mean())
        for j in range(1, len(mean_rows)):
            if not mean_rows[j] < mean_rows[j - 1]:
                raise ValueError(
                    f"order {orders[j]} does not sit above order {orders[j - 1]}"
                )

    @property
    def width(self) -> int:
        return self.semantic_mask.width

    @property
    def height(self) -> int:
        return self.semantic_mask.height


@dataclass(frozen=True, eq=False)
class AugmentedSample:
    """Canvas-sized semantic and floor masks plus the warp provenance."""

    semantic_mask: LabelMask
    floor_mask: LabelMask
    provenance: tuple[tuple[int, Quad, Homography], ...]

    def __post_init__(self):
        object.__setattr__(self, "provenance", tuple(self.provenance))
        sem, flo = self.semantic_mask, self.floor_mask
        if (sem.width, sem.height) != (flo.width, flo.height):
            raise ValueError("semantic and floor masks must share dimensions")


def simplify_semantics(raw: LabelMask, mapping: Mapping[int, int]) -> LabelMask:
    """Pointwise relabeling through a code table.

    The table must cover every code present in the mask and may only target
    the simplified codes {other, window, door, shop}.
    """
    bad_targets = sorted(set(mapping.values()) - SIMPLIFIED_CODES)
    if bad_targets:
        raise ValueError(f"mapping targets non-simplified codes {bad_targets}")
    present = raw.label_set()
    missing = present - set(mapping.keys())
    if missing:
        raise UnmappedLabel(missing)
    lut = np.zeros(256, dtype=np.uint8)
    for src, dst in mapping.items():
        lut[src] = dst
    return LabelMask(raw.width, raw.height, lut[raw.labels])


def _facade_extent_quad(facade: RectifiedFacade) -> Quad:
    # pixel centers at integer coords: the outermost centers span (0,0)..(W-1,H-1)
    return Quad.axis_aligned(0.0, 0.0, facade.width - 1.0, facade.height - 1.0)


def generate_sample(
    facades: Sequence[tuple[RectifiedFacade, Quad]],
    canvas_w: int,
    canvas_h: int,
    seed: int = 0,
) -> AugmentedSample:
    """Warp each (facade, quad) pair onto a blank canvas and composite.

    For every pair, the homography maps the facade's full pixel extent onto
    the quad; both masks are pulled through it with nearest-neighbor lookup.
    Inside the quad, warped background pixels are stamped with the quad's
    orientation code so the semantic mask carries the facade orientation.

    ``seed`` is part of the signature for forward compatibility with
    stochastic appearance variants; label warping itself is deterministic in
    the inputs, so the seed is currently unused.
    """
    del seed
    for _, quad in facades:
        for c in quad.corners:
            if not (0 <= c.x <= canvas_w and 0 <= c.y <= canvas_h):
                raise ValueError(
                    f"quad corner ({c.x}, {c.y}) outside canvas {canvas_w}x{canvas_h}"
                )

    sem = np.zeros((canvas_h, canvas_w), dtype=np.uint8)
    flo = np.zeros((canvas_h, canvas_w), dtype=np.uint8)
    provenance = []
    for idx, (facade, quad) in enumerate(facades):
        h = homography_from_quads(_facade_extent_quad(facade), quad)
        sx, sy, finite = inverse_map_grid(h, canvas_w, canvas_h)
        ix = nearest_index(sx)
        iy = nearest_index(sy)
        inside = finite & (ix >= 0) & (ix < facade.width) & (iy >= 0) & (iy < facade.height)

        warped_sem = facade.semantic_mask.labels[iy[inside], ix[inside]]
        orient = ORIENTATION_CODE[quad.orientation]
        sem[inside] = np.where(warped_sem == 0, orient, warped_sem)
        flo[inside] = facade.floor_mask.labels[iy[inside], ix[inside]]
        provenance.append((idx, quad, h))

    return AugmentedSample(
        LabelMask(canvas_w, canvas_h, sem),
        LabelMask(canvas_w, canvas_h, flo),
        tuple(provenance),
    )


def rasterize_floor_lines(
    lines: Sequence[Line5Tuple], band_px: int = 3, w: int = 480, h: int = 360
) -> LabelMask:
    """Paint each line as a band of vertical thickness band_px into a floor mask.

    Column x within [xs, xe] gets label ``order`` at every integer row r with
    |r - y(x)| <= band_px / 2, where y(x) linearly interpolates the endpoints.
    Out-of-canvas pixels are clipped; later lines overwrite earlier ones.
    """
    if band_px < 1:
        raise ValueError(f"band_px must be >= 1, got {band_px}")
    out = np.zeros((h, w), dtype=np.uint8)
    half = band_px / 2.0
    for ln in lines:
        if not 1 <= ln.order <= MAX_FLOOR_ORDER:
            raise ValueError(f"order {ln.order} outside the floor palette")
        x_lo = max(0, int(np.ceil(ln.xs)))
        x_hi = min(w - 1, int(np.floor(ln.xe)))
        if x_hi < x_lo:
            continue
        for x in range(x_lo, x_hi + 1):
            if ln.xe == ln.xs:
                # degenerate column segment: cover the endpoint span plus the band
                y_top = min(ln.ys, ln.ye) - half
                y_bot = max(ln.ys, ln.ye) + half
            else:
                yc = ln.ys + (ln.ye - ln.ys) * (x - ln.xs) / (ln.xe - ln.xs)
                y_top = yc - half
                y_bot = yc + half
            r_lo = max(0, int(np.ceil(y_top)))
            r_hi = min(h - 1, int(np.floor(y_bot)))
            if r_hi >= r_lo:
                out[r_lo : r_hi + 1, x] = ln.order
    return LabelMask(w, h, out)
