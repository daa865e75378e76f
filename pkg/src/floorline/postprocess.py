"""Geometry post-processing: from segmentation masks to per-facade line 5-tuples.

Pipeline stages:
  (i)   group facade pixels into connected super-segments (8-connectivity);
  (ii)  bucket floor-line pixels by (facade, order), merging disjoint blobs;
  (iii) least-squares line fit per group, then joint refinement that anchors
        all of a facade's lines to a common vanishing point;
  (iv)  endpoints from each facade's horizontal extent, then floor-order
        enforcement (orders must grow from bottom to top).

Facades are independent after grouping; an error in one never aborts another.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateSpread,
    FloorLineError,
    LineOutsideFacade,
    TooFewLines,
)
from .geometry import LabelMask, Line5Tuple, Point2
from .io_formats import FACADE_PALETTE, FLOOR_PALETTE, ORIENTATION_NAME


class ParallelSentinel:
    """Marker value: the facade's lines are mutually parallel, so no finite
    vanishing point exists (front-facing facade, VP at infinity)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ParallelSentinel()"


PARALLEL_LINES = ParallelSentinel()


@dataclass(frozen=True)
class PipelineConfig:
    """Tunables for the post-processing stage (all deliberate defaults)."""

    min_area: int = 50
    parallel_slope_eps: float = 1e-4
    convergence_tol: float = 1e-8
    max_iters: int = 5000

    def __post_init__(self):
        if self.min_area < 1 or self.max_iters < 1:
            raise ValueError("min_area and max_iters must be positive")
        if self.parallel_slope_eps <= 0 or self.convergence_tol <= 0:
            raise ValueError("parallel_slope_eps and convergence_tol must be positive")


@dataclass(frozen=True, eq=False)
class FacadeRegion:
    """One connected facade instance."""

    id: int
    orientation: str
    pixels: frozenset[tuple[int, int]]
    x_min: int
    x_max: int
    y_min: int
    y_max: int

    def __post_init__(self):
        if not self.pixels:
            raise ValueError("facade region must contain pixels")


@dataclass(frozen=True, eq=False)
class LinePixelGroup:
    """All pixels of one floor order inside one facade (blobs already merged)."""

    facade_id: int
    order: int
    pixels: frozenset[tuple[float, float]]

    def __post_init__(self):
        object.__setattr__(self, "pixels", frozenset(self.pixels))
        if not self.pixels:
            raise ValueError("line pixel group must contain pixels")


@dataclass(frozen=True)
class PolylineFit:
    """Least-squares line y = beta0 + beta1 * x with its residual sum of squares."""

    beta0: float
    beta1: float
    rss: float

    def y_at(self, x: float) -> float:
        return self.beta0 + self.beta1 * x


@dataclass(frozen=True)
class VpLine:
    """A line re-parameterized through a vanishing point: y = beta (x - xc) + yc."""

    beta: float
    vp: Point2

    def y_at(self, x: float) -> float:
        return self.beta * (x - self.vp.x) + self.vp.y


@dataclass(frozen=True)
class VpSolution:
    """Refined slopes plus the common vanishing point (or parallel sentinel).

    ``slopes[i]`` belongs to the i-th input group. ``fits`` are the
    unrefined per-group least-squares fits; for the parallel case they define
    the output lines. ``initial_loss``/``final_loss`` are the joint objective
    (in original pixel coordinates) at initialization and after refinement;
    ``loss_history`` is the accepted-step sequence between them, which
    backtracking keeps non-increasing.
    """

    vp: Point2 | ParallelSentinel
    slopes: tuple[float, ...]
    final_loss: float
    iterations: int
    fits: tuple[PolylineFit, ...]
    initial_loss: float
    loss_history: tuple[float, ...]

    def line(self, i: int) -> "VpLine | PolylineFit":
        if isinstance(self.vp, ParallelSentinel):
            return self.fits[i]
        return VpLine(self.slopes[i], self.vp)


# -- grouping -----------------------------------------------------------------

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def group_facades(facade_mask: LabelMask, min_area: int = 50) -> list[FacadeRegion]:
    """Connected components over all non-other facade labels.

    Windows, doors, and shops count as facade interior, so a facade plus its
    openings comes back as one super-segment. Orientation is the majority
    orientation code inside the component ("front" if none occurs, which only
    happens for hand-made masks). Components below min_area are dropped; ids
    are renumbered 1..n in raster-scan order.
    """
    FACADE_PALETTE.validate(facade_mask)
    labels = facade_mask.labels
    comp, n_comp = ndimage.label(labels != 0, structure=_EIGHT_CONNECTED)
    regions: list[FacadeRegion] = []
    for idx, slc in enumerate(ndimage.find_objects(comp), start=1):
        if slc is None:
            continue
        local = comp[slc] == idx
        if int(local.sum()) < min_area:
            continue
        ys, xs = np.nonzero(local)
        ys = ys + slc[0].start
        xs = xs + slc[1].start
        counts = np.bincount(labels[ys, xs], minlength=7)
        orient_counts = counts[4:7]
        if orient_counts.sum() == 0:
            orientation = "front"
        else:
            orientation = ORIENTATION_NAME[4 + int(np.argmax(orient_counts))]
        regions.append(
            FacadeRegion(
                id=len(regions) + 1,
                orientation=orientation,
                pixels=frozenset(zip(xs.tolist(), ys.tolist())),
                x_min=int(xs.min()),
                x_max=int(xs.max()),
                y_min=int(ys.min()),
                y_max=int(ys.max()),
            )
        )
    return regions


def group_lines(
    floor_mask: LabelMask, facades: Sequence[FacadeRegion]
) -> list[LinePixelGroup]:
    """Bucket floor-line pixels by (containing facade, order).

    Pixels outside every facade are discarded; disjoint blobs of the same
    order inside one facade are merged unconditionally into a single group.
    """
    FLOOR_PALETTE.validate(floor_mask)
    id_map = np.zeros((floor_mask.height, floor_mask.width), dtype=np.int32)
    for region in facades:
        if not region.pixels:
            continue
        arr = np.array(sorted(region.pixels), dtype=np.int64)
        in_bounds = (arr[:, 0] < floor_mask.width) & (arr[:, 1] < floor_mask.height)
        arr = arr[in_bounds]
        id_map[arr[:, 1], arr[:, 0]] = region.id

    ys, xs = np.nonzero(floor_mask.labels)
    orders = floor_mask.labels[ys, xs]
    owners = id_map[ys, xs]
    keep = owners > 0
    buckets: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for x, y, order, owner in zip(
        xs[keep].tolist(), ys[keep].tolist(), orders[keep].tolist(), owners[keep].tolist()
    ):
        buckets.setdefault((owner, order), []).append((x, y))
    return [
        LinePixelGroup(facade_id, order, frozenset(pix))
        for (facade_id, order), pix in sorted(buckets.items())
    ]


# -- fitting and refinement -----------------------------------------------------


def _pixel_array(pixels) -> np.ndarray:
    # sorted for run-to-run determinism: float sums depend on addend order
    return np.array(sorted(pixels), dtype=np.float64)


def polyfit_line(pixels) -> PolylineFit:
    """Closed-form least squares of y on x via the normal equations."""
    arr = _pixel_array(pixels)
    if arr.size == 0:
        raise DegenerateSpread("no pixels to fit")
    x, y = arr[:, 0], arr[:, 1]
    spread = float(x.max() - x.min())
    if arr.shape[0] < 2 or spread < 2.0:
        raise DegenerateSpread(
            f"x-spread {spread:g} px is too narrow for a stable fit (need >= 2)"
        )
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    beta1 = float(dx @ (y - ym)) / float(dx @ dx)
    beta0 = float(ym - beta1 * xm)
    r = y - beta0 - beta1 * x
    return PolylineFit(beta0, beta1, float(r @ r))


def _pairwise_intersections(fits: Sequence[PolylineFit], eps: float) -> list[tuple[float, float]]:
    pts = []
    for i in range(len(fits)):
        for j in range(i + 1, len(fits)):
            db = fits[i].beta1 - fits[j].beta1
            if abs(db) < eps:
                continue
            x = (fits[j].beta0 - fits[i].beta0) / db
            pts.append((x, fits[i].y_at(x)))
    return pts


def _vp_objective(theta, x, y, gidx, m):
    beta = theta[:m]
    xc, yc = theta[m], theta[m + 1]
    r = y - beta[gidx] * (x - xc) - yc
    return float(r @ r), r


def _vp_gradient(theta, r, x, gidx, m):
    beta = theta[:m]
    xc = theta[m]
    grad = np.empty(m + 2)
    grad[:m] = -2.0 * np.bincount(gidx, weights=r * (x - xc), minlength=m)
    grad[m] = 2.0 * float(r @ beta[gidx])
    grad[m + 1] = -2.0 * float(r.sum())
    return grad


def refine_vp(
    groups: Sequence[LinePixelGroup],
    parallel_slope_eps: float = 1e-4,
    convergence_tol: float = 1e-8,
    max_iters: int = 5000,
) -> VpSolution:
    """Jointly refine a facade's line slopes and their common vanishing point.

    Minimizes sum_i sum_j (y_ij - beta_i (x_ij - xc) - yc)^2 by gradient
    descent. Slopes start from the per-group least-squares fits and (xc, yc)
    from the median of the pairwise intersections of those fits; coordinates
    are rescaled to [0, 1] internally for conditioning. Backtracking halves
    any step that would increase the loss, so the loss sequence never grows;
    iteration stops when the relative loss change drops below
    ``convergence_tol`` or after ``max_iters`` accepted steps.

    If every pair of initial slopes differs by less than
    ``parallel_slope_eps`` the lines are treated as parallel: no finite VP
    exists and the unrefined fits are returned behind a ParallelSentinel.
    """
    groups = list(groups)
    if len(groups) < 2:
        raise TooFewLines(f"need at least 2 line groups, got {len(groups)}")
    facade_ids = {g.facade_id for g in groups}
    if len(facade_ids) != 1:
        raise ValueError(f"groups span multiple facades: {sorted(facade_ids)}")

    fits = tuple(polyfit_line(g.pixels) for g in groups)
    slopes0 = [f.beta1 for f in fits]
    max_gap = max(
        abs(slopes0[i] - slopes0[j])
        for i in range(len(slopes0))
        for j in range(i + 1, len(slopes0))
    )
    if max_gap < parallel_slope_eps:
        rss = float(sum(f.rss for f in fits))
        return VpSolution(
            vp=PARALLEL_LINES,
            slopes=tuple(slopes0),
            final_loss=rss,
            iterations=0,
            fits=fits,
            initial_loss=rss,
            loss_history=(rss,),
        )

    arrays = [_pixel_array(g.pixels) for g in groups]
    x = np.concatenate([a[:, 0] for a in arrays])
    y = np.concatenate([a[:, 1] for a in arrays])
    gidx = np.concatenate(
        [np.full(len(a), i, dtype=np.int64) for i, a in enumerate(arrays)]
    )
    m = len(groups)

    inter = _pairwise_intersections(fits, parallel_slope_eps)
    vp0 = (float(np.median([p[0] for p in inter])), float(np.median([p[1] for p in inter])))

    # rescale pixel coordinates to [0, 1]; slopes are invariant under the
    # shared scale, the VP transforms affinely
    x0, y0 = float(x.min()), float(y.min())
    s = max(float(x.max() - x0), float(y.max() - y0), 1.0)
    xs = (x - x0) / s
    ys = (y - y0) / s

    theta = np.empty(m + 2)
    theta[:m] = slopes0
    theta[m] = (vp0[0] - x0) / s
    theta[m + 1] = (vp0[1] - y0) / s

    loss, r = _vp_objective(theta, xs, ys, gidx, m)
    history = [loss]
    iterations = 0
    step = 1.0
    prev_theta = None
    prev_grad = None
    for _ in range(max_iters):
        grad = _vp_gradient(theta, r, xs, gidx, m)
        gnorm = float(grad @ grad)
        if gnorm == 0.0:
            break
        if prev_grad is not None:
            # Barzilai-Borwein step estimate; backtracking below keeps it safe
            dtheta = theta - prev_theta
            dgrad = grad - prev_grad
            denom = float(dtheta @ dgrad)
            if denom > 0:
                step = float(dtheta @ dtheta) / denom
            else:
                step *= 2.0
        accepted = False
        while step > 1e-18:
            cand = theta - step * grad
            cand_loss, cand_r = _vp_objective(cand, xs, ys, gidx, m)
            if cand_loss <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        prev_theta, prev_grad = theta, grad
        theta, new_loss, r = cand, cand_loss, cand_r
        iterations += 1
        history.append(new_loss)
        if abs(loss - new_loss) <= convergence_tol * max(loss, 1e-30):
            loss = new_loss
            break
        loss = new_loss

    vp = Point2(x0 + s * float(theta[m]), y0 + s * float(theta[m + 1]))
    slopes = tuple(float(b) for b in theta[:m])
    # report losses in original pixel units; one shared positive factor keeps
    # the accepted sequence non-increasing
    loss_history = tuple(h * s * s for h in history)
    return VpSolution(
        vp=vp,
        slopes=slopes,
        final_loss=loss_history[-1],
        iterations=iterations,
        fits=fits,
        initial_loss=loss_history[0],
        loss_history=loss_history,
    )


def derive_endpoints(facade: FacadeRegion, fit, order: int) -> Line5Tuple:
    """Evaluate a fitted line at the facade's horizontal extent.

    ``fit`` is anything with y_at(x) (a PolylineFit or a VpLine). Endpoint ys
    are clamped into the facade's vertical range; if the whole segment lies
    outside that range, there is no line to emit.
    """
    ys_raw = fit.y_at(float(facade.x_min))
    ye_raw = fit.y_at(float(facade.x_max))
    lo, hi = float(facade.y_min), float(facade.y_max)
    if (ys_raw < lo and ye_raw < lo) or (ys_raw > hi and ye_raw > hi):
        raise LineOutsideFacade(
            f"segment y-range [{min(ys_raw, ye_raw):g}, {max(ys_raw, ye_raw):g}] misses "
            f"facade rows [{lo:g}, {hi:g}]"
        )
    ys = min(max(ys_raw, lo), hi)
    ye = min(max(ye_raw, lo), hi)
    return Line5Tuple(float(facade.x_min), ys, float(facade.x_max), ye, order)


def enforce_order(lines: Sequence[Line5Tuple]) -> list[Line5Tuple]:
    """Make floor orders strictly increase from bottom to top.

    If the incoming orders already satisfy the constraint they are preserved
    unchanged (gaps allowed). Otherwise lines are sorted bottom-most first
    (mean y descending, ties broken by the original order label) and
    relabeled 1, 2, ...
    """
    lines = list(lines)
    if not lines:
        return []
    by_order = sorted(lines, key=lambda ln: ln.order)
    orders_unique = len({ln.order for ln in lines}) == len(lines)
    monotone = all(
        by_order[i].mean_y > by_order[i + 1].mean_y for i in range(len(by_order) - 1)
    )
    if orders_unique and monotone:
        return lines
    ranked = sorted(lines, key=lambda ln: (-ln.mean_y, ln.order))
    return [
        Line5Tuple(ln.xs, ln.ys, ln.xe, ln.ye, rank)
        for rank, ln in enumerate(ranked, start=1)
    ]


# -- full pipeline --------------------------------------------------------------


@dataclass(frozen=True)
class FacadeOutput:
    """Post-processing result for one facade; ``errors`` lists skipped stages."""

    facade: FacadeRegion
    vp: Point2 | None
    lines: tuple[Line5Tuple, ...]
    solution: VpSolution | None
    errors: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class PipelineResult:
    facades: tuple[FacadeOutput, ...]


def run_pipeline(
    facade_mask: LabelMask,
    floor_mask: LabelMask,
    config: PipelineConfig = PipelineConfig(),
) -> PipelineResult:
    """Compose grouping, fitting, VP refinement, endpoints, and ordering.

    Facades with a single usable line skip refinement and come back with
    vp=None; per-facade errors are collected, never propagated across
    facades.
    """
    if (facade_mask.width, facade_mask.height) != (floor_mask.width, floor_mask.height):
        raise ValueError("facade and floor masks must share dimensions")
    regions = group_facades(facade_mask, min_area=config.min_area)
    groups = group_lines(floor_mask, regions)

    outputs = []
    for region in regions:
        mine = sorted(
            (g for g in groups if g.facade_id == region.id), key=lambda g: g.order
        )
        errors: list[str] = []
        usable: list[LinePixelGroup] = []
        for g in mine:
            try:
                polyfit_line(g.pixels)
                usable.append(g)
            except DegenerateSpread as exc:
                errors.append(f"order {g.order}: {exc}")

        vp: Point2 | None = None
        solution: VpSolution | None = None
        lines: list[Line5Tuple] = []
        if len(usable) == 1:
            g = usable[0]
            try:
                lines.append(derive_endpoints(region, polyfit_line(g.pixels), g.order))
            except FloorLineError as exc:
                errors.append(f"order {g.order}: {exc}")
        elif len(usable) >= 2:
            try:
                solution = refine_vp(
                    usable,
                    parallel_slope_eps=config.parallel_slope_eps,
                    convergence_tol=config.convergence_tol,
                    max_iters=config.max_iters,
                )
            except FloorLineError as exc:
                errors.append(str(exc))
                solution = None
            if solution is not None:
                if not isinstance(solution.vp, ParallelSentinel):
                    vp = solution.vp
                for i, g in enumerate(usable):
                    try:
                        lines.append(derive_endpoints(region, solution.line(i), g.order))
                    except FloorLineError as exc:
                        errors.append(f"order {g.order}: {exc}")
        outputs.append(
            FacadeOutput(
                facade=region,
                vp=vp,
                lines=tuple(enforce_order(lines)),
                solution=solution,
                errors=tuple(errors),
            )
        )
    return PipelineResult(tuple(outputs))
