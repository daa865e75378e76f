"""Projective-geometry primitives: points, line 5-tuples, quads, homographies, masks.

Coordinate conventions used throughout the package:
  - image origin at the top-left corner, x grows right, y grows DOWN;
  - pixel centers sit at integer coordinates (x, y) in {0..W-1} x {0..H-1};
  - homographies are 3x3 real matrices normalized so m[2][2] = 1.

All types are immutable after construction and every operation is a pure
function, so everything here is safe to use from multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuad, PointAtInfinity, SingularMatrix

ORIENTATIONS = ("left", "right", "front")

#: Highest floor order carried by a line label.
MAX_FLOOR_ORDER = 10

_DEPTH_EPS = 1e-12
_CORNER_TOL = 1e-9


@dataclass(frozen=True)
class Point2:
    """A 2-D point in pixel coordinates."""

    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Line5Tuple:
    """One recognized floor-level line: two endpoints plus the floor order.

    Endpoints are stored left-to-right (xs <= xe); order is 1-based and capped
    at MAX_FLOOR_ORDER.
    """

    xs: float
    ys: float
    xe: float
    ye: float
    order: int

    def __post_init__(self):
        for name in ("xs", "ys", "xe", "ye"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "order", int(self.order))
        for v in (self.xs, self.ys, self.xe, self.ye):
            if not math.isfinite(v):
                raise ValueError("line endpoints must be finite")
        if self.xs > self.xe:
            raise ValueError(f"endpoints must be stored left-to-right (xs={self.xs} > xe={self.xe})")
        if not 1 <= self.order <= MAX_FLOOR_ORDER:
            raise ValueError(f"floor order must be in 1..{MAX_FLOOR_ORDER}, got {self.order}")

    @property
    def mean_y(self) -> float:
        return 0.5 * (self.ys + self.ye)


@dataclass(frozen=True)
class Quad:
    """A convex quad marking one planar facade region.

    Corners are ordered top-left, top-right, bottom-right, bottom-left.
    """

    corners: tuple[Point2, Point2, Point2, Point2]
    orientation: str

    def __post_init__(self):
        if len(self.corners) != 4:
            raise ValueError("quad needs exactly 4 corners")
        object.__setattr__(self, "corners", tuple(self.corners))
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {self.orientation!r}")
        # Strict convexity: all consecutive edge cross products share one
        # nonzero sign. Rules out self-intersection and collinear corners.
        signs = []
        for i in range(4):
            a = self.corners[i]
            b = self.corners[(i + 1) % 4]
            c = self.corners[(i + 2) % 4]
            cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
            signs.append(cross)
        if any(s == 0 for s in signs) or not (all(s > 0 for s in signs) or all(s < 0 for s in signs)):
            raise ValueError("quad corners must form a strictly convex polygon")

    @classmethod
    def axis_aligned(cls, x0: float, y0: float, x1: float, y1: float, orientation: str = "front") -> "Quad":
        """Rectangle spanning [x0, x1] x [y0, y1] in corner order TL, TR, BR, BL."""
        return cls((Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)), orientation)


@dataclass(frozen=True, eq=False)
class Homography:
    """3x3 projective map, normalized so m[2][2] = 1."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography matrix must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("homography entries must be finite")
        if abs(m[2, 2] - 1.0) > 1e-12:
            raise ValueError("homography must be normalized to m[2][2] = 1 (use from_array)")
        if abs(np.linalg.det(m)) <= 1e-12:
            raise SingularMatrix("homography matrix is singular")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @classmethod
    def from_array(cls, m) -> "Homography":
        """Build from any 3x3 array, renormalizing so m[2][2] = 1."""
        m = np.array(m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography matrix must be 3x3, got {m.shape}")
        if abs(m[2, 2]) <= _DEPTH_EPS:
            raise SingularMatrix("cannot normalize: m[2][2] is (near) zero")
        return cls(m / m[2, 2])

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def to_flat(self) -> list[float]:
        """Row-major 9-element list (the JSON wire format)."""
        return [float(v) for v in self.m.reshape(-1)]

    @classmethod
    def from_flat(cls, values) -> "Homography":
        values = list(values)
        if len(values) != 9:
            raise ValueError(f"expected 9 matrix entries, got {len(values)}")
        return cls.from_array(np.array(values, dtype=np.float64).reshape(3, 3))

    def __eq__(self, other):
        return isinstance(other, Homography) and np.array_equal(self.m, other.m)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LabelMask:
    """W x H grid of small-integer class labels (row-major, uint8).

    Which codes are allowed depends on the mask's role (facade vs floor
    palette); that check belongs to the caller that knows the role.
    """

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        arr = np.asarray(self.labels)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"label grid has {arr.size} entries, expected {self.width * self.height}"
            )
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("labels must be integers in [0, 255]")
        arr = arr.astype(np.uint8).reshape(self.height, self.width)
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @classmethod
    def from_array(cls, arr) -> "LabelMask":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D label grid")
        return cls(arr.shape[1], arr.shape[0], arr)

    @classmethod
    def full(cls, width: int, height: int, fill: int = 0) -> "LabelMask":
        return cls(width, height, np.full((height, width), fill, dtype=np.uint8))

    def label_set(self) -> frozenset[int]:
        return frozenset(int(v) for v in np.unique(self.labels))

    def __eq__(self, other):
        return (
            isinstance(other, LabelMask)
            and self.width == other.width
            and self.height == other.height
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


# -- operations ---------------------------------------------------------------


def homography_from_quads(src: Quad, dst: Quad) -> Homography:
    """Homography mapping the four src corners onto the four dst corners.

    Solves the 8-unknown direct linear system built from the 4 corner
    correspondences (h22 pinned to 1).
    """
    a = np.zeros((8, 8), dtype=np.float64)
    b = np.zeros(8, dtype=np.float64)
    for k in range(4):
        x, y = src.corners[k].x, src.corners[k].y
        u, v = dst.corners[k].x, dst.corners[k].y
        a[2 * k] = (x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y)
        b[2 * k] = u
        a[2 * k + 1] = (0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y)
        b[2 * k + 1] = v
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateQuad(f"corner correspondences are rank-deficient: {exc}") from exc
    hom = Homography(np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]
    ))
    for k in range(4):
        mapped = apply_homography(hom, src.corners[k])
        if math.hypot(mapped.x - dst.corners[k].x, mapped.y - dst.corners[k].y) > _CORNER_TOL:
            raise DegenerateQuad("solved homography does not interpolate the corners")
    return hom


def apply_homography(h: Homography, p: Point2) -> Point2:
    """Map a point through h; raises PointAtInfinity at (near-)zero depth."""
    m = h.m
    w = m[2, 0] * p.x + m[2, 1] * p.y + m[2, 2]
    if abs(w) <= _DEPTH_EPS:
        raise PointAtInfinity(f"point ({p.x}, {p.y}) maps to infinity (depth {w:g})")
    return Point2(
        (m[0, 0] * p.x + m[0, 1] * p.y + m[0, 2]) / w,
        (m[1, 0] * p.x + m[1, 1] * p.y + m[1, 2]) / w,
    )


def invert_homography(h: Homography) -> Homography:
    """Inverse map, renormalized to m[2][2] = 1."""
    try:
        inv = np.linalg.inv(h.m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    if abs(inv[2, 2]) <= _DEPTH_EPS:
        raise SingularMatrix("inverse cannot be normalized: m[2][2] is (near) zero")
    return Homography(inv / inv[2, 2])


def inverse_map_grid(h: Homography, out_w: int, out_h: int):
    """Pull every output pixel center back through h^-1.

    Returns (sx, sy, finite): float64 arrays of shape (out_h, out_w) holding
    source coordinates, plus a bool mask of pixels whose homogeneous depth is
    safely nonzero. sx/sy are 0 where finite is False.
    """
    hinv = invert_homography(h).m
    xs = np.arange(out_w, dtype=np.float64)
    ys = np.arange(out_h, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    w = hinv[2, 0] * gx + hinv[2, 1] * gy + hinv[2, 2]
    finite = np.abs(w) > _DEPTH_EPS
    safe_w = np.where(finite, w, 1.0)
    sx = np.where(finite, (hinv[0, 0] * gx + hinv[0, 1] * gy + hinv[0, 2]) / safe_w, 0.0)
    sy = np.where(finite, (hinv[1, 0] * gx + hinv[1, 1] * gy + hinv[1, 2]) / safe_w, 0.0)
    return sx, sy, finite


def nearest_index(values: np.ndarray) -> np.ndarray:
    """Nearest integer pixel index; exact half-pixel ties go to the smaller index.

    The tie rule makes a pure x2 scale duplicate each source pixel into a
    clean 2x2 block instead of shifting the lattice.
    """
    return np.ceil(np.asarray(values, dtype=np.float64) - 0.5).astype(np.int64)


def warp_mask(src: LabelMask, h: Homography, out_w: int, out_h: int, fill: int = 0) -> LabelMask:
    """Resample a label mask through h by inverse mapping.

    Each output pixel center is pulled through h^-1 and looked up with
    nearest-neighbor sampling (labels are categorical, never interpolated).
    Pixels that land outside the source, or at infinity, receive ``fill``.
    """
    if not 0 <= fill <= 255:
        raise ValueError(f"fill label must be in [0, 255], got {fill}")
    sx, sy, finite = inverse_map_grid(h, out_w, out_h)
    ix = nearest_index(sx)
    iy = nearest_index(sy)
    inside = finite & (ix >= 0) & (ix < src.width) & (iy >= 0) & (iy < src.height)
    out = np.full((out_h, out_w), fill, dtype=np.uint8)
    out[inside] = src.labels[iy[inside], ix[inside]]
    return LabelMask(out_w, out_h, out)
