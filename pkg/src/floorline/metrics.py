"""Evaluation metrics: pixel-wise F1 over (pixel, order) sets and line-wise F1
driven by per-line confidence against the ground-truth floor mask.

Lower floors are orders 1-3, upper floors are orders >= 4. Dataset scores are
micro-averaged: confusion counts are pooled across images before each F1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, EmptyRaster
from .geometry import MAX_FLOOR_ORDER, LabelMask, Line5Tuple

#: Inclusive order ranges per report split.
SPLITS: Mapping[str, tuple[int, int]] = {
    "lower": (1, 3),
    "upper": (4, MAX_FLOOR_ORDER),
    "overall": (1, MAX_FLOOR_ORDER),
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        if denom == 0:
            return 1.0  # nothing to find and nothing found: vacuous success
        return 2.0 * self.tp / denom


@dataclass(frozen=True)
class EvalReport:
    """Micro-averaged pixel and line F1 per split, with the pooled counts."""

    pixel_f1: Mapping[str, float]
    line_f1: Mapping[str, float]
    pixel_counts: Mapping[str, ConfusionCounts]
    line_counts: Mapping[str, ConfusionCounts]


def _pixel_counts(gt: LabelMask, pred: LabelMask, lo: int, hi: int) -> ConfusionCounts:
    g = gt.labels
    p = pred.labels
    g_in = (g >= lo) & (g <= hi)
    p_in = (p >= lo) & (p <= hi)
    match = g == p
    return ConfusionCounts(
        tp=int(np.count_nonzero(g_in & match)),
        fp=int(np.count_nonzero(p_in & ~match)),
        fn=int(np.count_nonzero(g_in & ~match)),
    )


def pixel_f1(gt: LabelMask, pred: LabelMask) -> tuple[ConfusionCounts, float]:
    """F1 over (pixel, order) pairs: a true positive is a pixel whose predicted
    order equals its ground-truth order (both non-other)."""
    if (gt.width, gt.height) != (pred.width, pred.height):
        raise DimensionMismatch(
            f"gt is {gt.width}x{gt.height}, pred is {pred.width}x{pred.height}"
        )
    counts = _pixel_counts(gt, pred, 1, MAX_FLOOR_ORDER)
    return counts, counts.f1


def _round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


def _bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    pts = []
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return pts


def line_raster(line: Line5Tuple, w: int, h: int) -> frozenset[tuple[int, int]]:
    """The line's three-pixel-wide raster: Bresenham centerline between the
    rounded endpoints, dilated one row up and one row down, clipped to bounds."""
    x0, y0 = _round_half_up(line.xs), _round_half_up(line.ys)
    x1, y1 = _round_half_up(line.xe), _round_half_up(line.ye)
    pixels = set()
    for x, y in _bresenham(x0, y0, x1, y1):
        for dy in (-1, 0, 1):
            if 0 <= x < w and 0 <= y + dy < h:
                pixels.add((x, y + dy))
    return frozenset(pixels)


def line_confidence(line: Line5Tuple, gt: LabelMask) -> float:
    """Fraction of the line's rasterized pixels whose ground-truth label equals
    the line's floor order."""
    pixels = line_raster(line, gt.width, gt.height)
    if not pixels:
        raise EmptyRaster("clipped segment covers zero pixels")
    hits = sum(1 for x, y in pixels if int(gt.labels[y, x]) == line.order)
    return hits / len(pixels)


def _line_counts(
    pred_lines: Sequence[tuple[int, Line5Tuple]],
    gt_lines: Sequence[tuple[int, Line5Tuple]],
    gt: LabelMask,
    lo: int,
    hi: int,
) -> ConfusionCounts:
    available = Counter(
        (fid, ln.order) for fid, ln in gt_lines if lo <= ln.order <= hi
    )
    tp = 0
    fp = 0
    for fid, ln in pred_lines:
        if not lo <= ln.order <= hi:
            continue
        key = (fid, ln.order)
        if line_confidence(ln, gt) > 0.5 and available[key] > 0:
            available[key] -= 1
            tp += 1
        else:
            fp += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=sum(available.values()))


def line_f1(
    pred_lines: Sequence[tuple[int, Line5Tuple]],
    gt_lines: Sequence[tuple[int, Line5Tuple]],
    gt: LabelMask,
) -> tuple[ConfusionCounts, float]:
    """Line-wise F1. Lines are (facade_id, line) pairs, since matching is by
    (facade, order): a prediction with confidence > 0.5 consumes the matching
    ground-truth line; duplicates and low-confidence predictions count as
    false positives, unconsumed ground-truth lines as false negatives.
    Facade numbering must be consistent between the two sides.
    """
    counts = _line_counts(pred_lines, gt_lines, gt, 1, MAX_FLOOR_ORDER)
    return counts, counts.f1


@dataclass(frozen=True)
class EvalPair:
    """Everything needed to score one image."""

    pred_mask: LabelMask
    pred_lines: tuple[tuple[int, Line5Tuple], ...]
    gt_mask: LabelMask
    gt_lines: tuple[tuple[int, Line5Tuple], ...]


def evaluate_pair_counts(pair: EvalPair) -> dict[str, tuple[ConfusionCounts, ConfusionCounts]]:
    """(pixel, line) confusion counts for one image, per split."""
    out = {}
    for name, (lo, hi) in SPLITS.items():
        px = _pixel_counts(pair.gt_mask, pair.pred_mask, lo, hi)
        ln = _line_counts(pair.pred_lines, pair.gt_lines, pair.gt_mask, lo, hi)
        out[name] = (px, ln)
    return out


def evaluate_dataset(pairs: Sequence[EvalPair]) -> EvalReport:
    """Pool confusion counts across images, then compute each F1 (micro-average)."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyDataset("evaluate_dataset needs at least one image pair")
    pixel_totals = {name: ConfusionCounts(0, 0, 0) for name in SPLITS}
    line_totals = {name: ConfusionCounts(0, 0, 0) for name in SPLITS}
    for pair in pairs:
        for name, (px, ln) in evaluate_pair_counts(pair).items():
            pixel_totals[name] = pixel_totals[name] + px
            line_totals[name] = line_totals[name] + ln
    return EvalReport(
        pixel_f1={name: c.f1 for name, c in pixel_totals.items()},
        line_f1={name: c.f1 for name, c in line_totals.items()},
        pixel_counts=pixel_totals,
        line_counts=line_totals,
    )
