"""Dataset characterization: bound partitions, per-order distributions, entropy.

The image is split (bottom to top) into n equal-height vertical bounds named
low, mid-low, mid-high, high for n = 4. Rows are divided with floor division
and the remainder rows go to the topmost bound. Entropies use log base 10;
probabilities are fractions of ALL pixels in a stratum, so floor classes
compete with the background and rows need not sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyDataset, ProbabilityOutOfRange
from .geometry import MAX_FLOOR_ORDER, LabelMask
from .io_formats import AnnotationRecord

#: Bound names for the 4-way split, bottom to top.
BOUND_NAMES_4 = ("low", "mid-low", "mid-high", "high")

#: Number of floor orders covered by the probability/entropy table.
TABLE_ORDERS = 6


def bound_row_ranges(height: int, n_bounds: int) -> list[tuple[int, int]]:
    """Half-open row ranges [lo, hi) per bound, index 0 = bottom ("low") bound.

    Rows are counted from the top of the image (y grows down), so bound 0
    covers the LAST rows. Each bound gets height // n_bounds rows; remainder
    rows are assigned to the topmost bound.
    """
    if n_bounds < 1:
        raise ValueError("n_bounds must be >= 1")
    base = height // n_bounds
    ranges = []
    for b in range(n_bounds - 1):
        ranges.append((height - (b + 1) * base, height - b * base))
    ranges.append((0, height - (n_bounds - 1) * base))
    return ranges


def class_entropy(p: Sequence[float]) -> float:
    """-sum(p * log10(p)) with the convention 0 * log 0 = 0."""
    total = 0.0
    for i, v in enumerate(p):
        if not (0.0 <= v <= 1.0) or not math.isfinite(v):
            raise ProbabilityOutOfRange(f"p[{i}] = {v} is outside [0, 1]")
        if v > 0.0:
            total -= v * math.log10(v)
    return total


@dataclass(frozen=True)
class VerticalBoundDistribution:
    """Per floor order: the fraction of its pixels in each vertical bound.

    Orders with zero pixels are absent; present orders have ratios summing
    to 1.
    """

    n_bounds: int
    ratios: Mapping[int, tuple[float, ...]]

    def __post_init__(self):
        object.__setattr__(self, "ratios", MappingProxyType(dict(self.ratios)))


def vertical_bound_distribution(mask: LabelMask, n_bounds: int = 4) -> VerticalBoundDistribution:
    """Count each order's pixels per vertical bound and normalize per order."""
    counts = _order_counts_per_bound([mask], n_bounds)
    ratios = {}
    for order in range(1, MAX_FLOOR_ORDER + 1):
        total = counts[:, order].sum()
        if total > 0:
            ratios[order] = tuple(float(c) / float(total) for c in counts[:, order])
    return VerticalBoundDistribution(n_bounds, ratios)


def dataset_bound_distribution(
    masks: Sequence[LabelMask], n_bounds: int = 4
) -> VerticalBoundDistribution:
    """Per-order bound ratios pooled over a whole mask collection."""
    counts = _order_counts_per_bound(masks, n_bounds)
    ratios = {}
    for order in range(1, MAX_FLOOR_ORDER + 1):
        total = counts[:, order].sum()
        if total > 0:
            ratios[order] = tuple(float(c) / float(total) for c in counts[:, order])
    return VerticalBoundDistribution(n_bounds, ratios)


def _order_counts_per_bound(masks: Iterable[LabelMask], n_bounds: int) -> np.ndarray:
    """(n_bounds, 256) pixel counts per bound per label, pooled over masks."""
    counts = np.zeros((n_bounds, 256), dtype=np.int64)
    for mask in masks:
        for b, (lo, hi) in enumerate(bound_row_ranges(mask.height, n_bounds)):
            if hi > lo:
                counts[b] += np.bincount(mask.labels[lo:hi].reshape(-1), minlength=256)
    return counts


@dataclass(frozen=True)
class EntropyRow:
    """Order probabilities and their entropy for one stratum of the image."""

    given: str
    probabilities: tuple[float, ...]
    entropy: float


@dataclass(frozen=True)
class EntropyReport:
    """Whole-image row plus one row per vertical bound, with the bound average."""

    rows: tuple[EntropyRow, ...]
    avg_bound_entropy: float


def bound_probability_table(masks: Sequence[LabelMask]) -> EntropyReport:
    """Probabilities of the lowest TABLE_ORDERS floor orders per stratum.

    Strata are the whole image plus the four vertical bounds. p_i is the
    fraction of ALL pixels in the stratum carrying order i. The reported
    average is the unweighted mean over the four bound rows.
    """
    masks = list(masks)
    if not masks:
        raise EmptyDataset("bound_probability_table needs at least one mask")
    n_bounds = len(BOUND_NAMES_4)
    counts = _order_counts_per_bound(masks, n_bounds)
    bound_rows = []
    for b, name in enumerate(BOUND_NAMES_4):
        stratum = int(counts[b].sum())
        ps = tuple(
            float(counts[b, order]) / stratum if stratum else 0.0
            for order in range(1, TABLE_ORDERS + 1)
        )
        bound_rows.append(EntropyRow(name, ps, class_entropy(ps)))

    whole = counts.sum(axis=0)
    total = int(whole.sum())
    ps = tuple(
        float(whole[order]) / total if total else 0.0 for order in range(1, TABLE_ORDERS + 1)
    )
    image_row = EntropyRow("image", ps, class_entropy(ps))

    avg = sum(r.entropy for r in bound_rows) / float(n_bounds)
    return EntropyReport((image_row, *bound_rows), avg)


def orientation_histogram(annotations: Iterable[AnnotationRecord]) -> dict[str, int]:
    """Count annotated quads per orientation."""
    hist: dict[str, int] = {}
    for rec in annotations:
        for quad in rec.facades:
            hist[quad.orientation] = hist.get(quad.orientation, 0) + 1
    return hist


def highest_floor_histogram(masks: Iterable[LabelMask]) -> dict[int, int]:
    """Count samples by the highest floor order present (masks with no floor
    pixels contribute nothing)."""
    hist: dict[int, int] = {}
    for mask in masks:
        top = int(mask.labels.max(initial=0))
        if 1 <= top <= MAX_FLOOR_ORDER:
            hist[top] = hist.get(top, 0) + 1
    return hist


def pixels_per_order(masks: Sequence[LabelMask]) -> dict[int, float]:
    """Average pixel count of each floor order over the given masks."""
    masks = list(masks)
    if not masks:
        return {}
    totals = np.zeros(256, dtype=np.int64)
    for mask in masks:
        totals += np.bincount(mask.labels.reshape(-1), minlength=256)
    return {
        order: float(totals[order]) / len(masks)
        for order in range(1, MAX_FLOOR_ORDER + 1)
        if totals[order] > 0
    }
