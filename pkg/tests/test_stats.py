"""Dataset-statistics tests.

The five reference entropy rows below are published table values: the row
probabilities are printed as percentages with 3 significant digits, and the
entropies were evidently computed from unrounded probabilities. Feeding the
printed probabilities into class_entropy (log base 10) reproduces four of the
five rows within +/-0.002; the mid-high row computes to 0.42680, which misses
the printed 0.429 by 0.0022. That row is marked as a strict expected failure
rather than loosening the tolerance.

Hand-computed example (one-term entropy): a 100x4 mask whose bottom row is all
order 1 has image-row p1 = 100/400 = 0.25 and entropy
-0.25 * log10(0.25) = 0.25 * log10(4) = 0.1505149978...
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import blank, grid
from floorline.errors import EmptyDataset, ProbabilityOutOfRange
from floorline.geometry import LabelMask, Quad
from floorline.io_formats import AnnotationRecord
from floorline.stats import (
    bound_probability_table,
    bound_row_ranges,
    class_entropy,
    dataset_bound_distribution,
    highest_floor_histogram,
    orientation_histogram,
    pixels_per_order,
    vertical_bound_distribution,
)

# printed reference rows: probabilities in percent and the printed entropy
REFERENCE_TABLE = {
    "image": ([9.75, 11.8, 9.56, 4.90, 2.83, 1.17], 0.436),
    "low": ([27.7, 10.1, 1.71, 0.35, 0.12, 0.03], 0.298),
    "mid-low": ([6.75, 20.1, 8.72, 2.97, 1.09, 0.32], 0.386),
    "mid-high": ([2.79, 10.3, 14.8, 7.07, 3.86, 1.20], 0.429),
    "high": ([1.80, 6.66, 13.0, 9.20, 6.22, 3.09], 0.442),
}

ENTROPY_TOL = 0.002

MID_HIGH_XFAIL = pytest.mark.xfail(
    strict=True,
    reason=(
        "printed probabilities are rounded to 3 significant digits; the "
        "entropy computed from them is 0.42680, which misses the printed "
        "0.429 by 0.0022 (> 0.002)"
    ),
)


class TestClassEntropy:
    @pytest.mark.parametrize(
        "row",
        [
            "image",
            "low",
            "mid-low",
            pytest.param("mid-high", marks=MID_HIGH_XFAIL),
            "high",
        ],
    )
    def test_reference_rows(self, row):
        percents, printed = REFERENCE_TABLE[row]
        computed = class_entropy([p / 100.0 for p in percents])
        assert computed == pytest.approx(printed, abs=ENTROPY_TOL)

    def test_certainty_has_zero_entropy(self):
        assert class_entropy([1.0]) == 0.0

    def test_zero_terms_contribute_nothing(self):
        assert class_entropy([0.5, 0.0, 0.0]) == class_entropy([0.5])

    def test_out_of_range_rejected(self):
        with pytest.raises(ProbabilityOutOfRange):
            class_entropy([1.2])
        with pytest.raises(ProbabilityOutOfRange):
            class_entropy([-0.1])
        with pytest.raises(ProbabilityOutOfRange):
            class_entropy([float("nan")])

    @given(st.permutations([0.1, 0.25, 0.0, 0.3, 0.05]))
    @settings(max_examples=30, deadline=None)
    def test_permutation_invariant(self, perm):
        assert class_entropy(perm) == pytest.approx(class_entropy(sorted(perm)), abs=1e-15)


def _bound_ranges_oracle(height, n):
    """Independent partition: floor-division size per bound, remainder rows to
    the topmost bound, bound 0 at the bottom."""
    base = height // n
    spans = []
    hi = height
    for _ in range(n - 1):
        spans.append((hi - base, hi))
        hi -= base
    spans.append((0, hi))
    return spans


class TestBoundPartition:
    @pytest.mark.parametrize("height,n", [(4, 4), (10, 4), (7, 4), (360, 4), (13, 10), (2, 4)])
    def test_matches_oracle_and_covers_all_rows(self, height, n):
        ranges = bound_row_ranges(height, n)
        assert ranges == _bound_ranges_oracle(height, n)
        covered = sorted(r for lo, hi in ranges for r in range(lo, hi))
        assert covered == list(range(height))

    def test_low_bound_is_bottom_rows(self):
        lo, hi = bound_row_ranges(8, 4)[0]
        assert (lo, hi) == (6, 8)


class TestVerticalBoundDistribution:
    def test_all_in_bottom_quarter(self):
        arr = blank(10, 8)
        arr[6:8, :] = 1  # bottom quarter of an 8-row image
        dist = vertical_bound_distribution(LabelMask.from_array(arr), 4)
        assert dist.ratios[1] == (1.0, 0.0, 0.0, 0.0)

    def test_uniform_stripe(self):
        arr = blank(6, 8)
        arr[:, 2] = 3
        dist = vertical_bound_distribution(LabelMask.from_array(arr), 4)
        assert dist.ratios[3] == (0.25, 0.25, 0.25, 0.25)

    def test_mixed_mask_matches_pixel_counting_oracle(self, rng):
        arr = rng.integers(0, 5, size=(11, 9)).astype(np.uint8)
        mask = LabelMask.from_array(arr)
        dist = vertical_bound_distribution(mask, 4)
        spans = _bound_ranges_oracle(11, 4)
        for order in range(1, 5):
            want = []
            total = int((arr == order).sum())
            for lo, hi in spans:
                count = sum(
                    1 for y in range(lo, hi) for x in range(9) if arr[y, x] == order
                )
                want.append(count / total if total else 0.0)
            if total:
                assert dist.ratios[order] == tuple(want)
                assert sum(dist.ratios[order]) == pytest.approx(1.0, abs=1e-9)
            else:
                assert order not in dist.ratios

    def test_pooled_dataset_distribution(self):
        a = blank(4, 4)
        a[3, :] = 1
        b = blank(4, 4)
        b[0, :] = 1
        pooled = dataset_bound_distribution(
            [LabelMask.from_array(a), LabelMask.from_array(b)], 4
        )
        assert pooled.ratios[1] == (0.5, 0.0, 0.0, 0.5)


class TestBoundProbabilityTable:
    def test_one_term_hand_computation(self):
        arr = blank(100, 4)
        arr[3, :] = 1
        report = bound_probability_table([LabelMask.from_array(arr)])
        image = report.rows[0]
        assert image.given == "image"
        assert image.probabilities[0] == pytest.approx(0.25, abs=1e-12)
        assert image.entropy == pytest.approx(0.25 * math.log10(4.0), abs=1e-12)

    def test_no_floor_pixels(self):
        report = bound_probability_table([LabelMask.full(8, 8, 0)])
        for row in report.rows:
            assert row.probabilities == (0.0,) * 6
            assert row.entropy == 0.0
        assert report.avg_bound_entropy == 0.0

    def test_row_names_and_avg(self):
        arr = blank(8, 8)
        arr[7, :] = 1
        arr[1, :] = 2
        report = bound_probability_table([LabelMask.from_array(arr)])
        assert [r.given for r in report.rows] == ["image", "low", "mid-low", "mid-high", "high"]
        bound_entropies = [r.entropy for r in report.rows[1:]]
        assert report.avg_bound_entropy == pytest.approx(sum(bound_entropies) / 4, abs=1e-15)

    def test_empty_dataset_rejected(self):
        with pytest.raises(EmptyDataset):
            bound_probability_table([])


class TestHistograms:
    def test_orientation_histogram(self):
        quads = [
            Quad.axis_aligned(0, 0, 10, 10, orientation=o) for o in ("left", "right", "front")
        ]
        rec = AnnotationRecord("a", 20, 20, tuple(quads))
        assert orientation_histogram([rec]) == {"left": 1, "right": 1, "front": 1}

    def test_empty_inputs(self):
        assert orientation_histogram([]) == {}
        assert highest_floor_histogram([]) == {}
        assert pixels_per_order([]) == {}

    def test_highest_floor_histogram(self):
        masks = [grid([[0, 1], [2, 0]]), grid([[1, 0], [0, 0]]), grid([[0, 0], [0, 0]])]
        assert highest_floor_histogram(masks) == {2: 1, 1: 1}

    def test_pixels_per_order_matches_brute_force(self, rng):
        arrays = [rng.integers(0, 6, size=(6, 7)).astype(np.uint8) for _ in range(5)]
        masks = [LabelMask.from_array(a) for a in arrays]
        got = pixels_per_order(masks)
        for order in range(1, 6):
            total = sum(int((a == order).sum()) for a in arrays)
            if total:
                assert got[order] == pytest.approx(total / 5.0, abs=1e-12)
            else:
                assert order not in got
