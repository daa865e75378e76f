"""Shared synthetic fixtures for round-trip, golden-file, and acceptance tests.

The scene is a 480x360 image holding two facades:
  - facade A (left-oriented, columns 40..240, rows 60..340) with three lines
    through the finite vanishing point (600, 150), slopes -0.3 / -0.2 / -0.1;
  - facade B (front, columns 300..460, rows 100..330) with one horizontal
    line, so it skips VP refinement.

Endpoints are chosen so each line spans exactly its facade's column extent:
  order 1: (40, 318) -> (240, 258)
  order 2: (40, 262) -> (240, 222)
  order 3: (40, 206) -> (240, 186)
  facade B order 1: (300, 220) -> (460, 220)
"""

import numpy as np

from floorline.augment import rasterize_floor_lines
from floorline.geometry import LabelMask, Line5Tuple
from floorline.postprocess import LinePixelGroup

W, H = 480, 360
VP_A = (600.0, 150.0)


def vp_line(beta: float, xs: float, xe: float, order: int) -> Line5Tuple:
    ys = beta * (xs - VP_A[0]) + VP_A[1]
    ye = beta * (xe - VP_A[0]) + VP_A[1]
    return Line5Tuple(xs, ys, xe, ye, order)


GT_LINES_A = (
    vp_line(-0.3, 40, 240, 1),
    vp_line(-0.2, 40, 240, 2),
    vp_line(-0.1, 40, 240, 3),
)
GT_LINE_B = Line5Tuple(300.0, 220.0, 460.0, 220.0, 1)

#: (facade_id, line) pairs in pipeline numbering (A = 1, B = 2).
GT_LINE_PAIRS = tuple((1, ln) for ln in GT_LINES_A) + ((2, GT_LINE_B),)


def build_scene(dx: int = 0, dy: int = 0, band_px: int = 3):
    """Facade mask + floor mask, optionally translated by integer (dx, dy)."""
    facade = np.zeros((H, W), dtype=np.uint8)
    facade[60 + dy : 341 + dy, 40 + dx : 241 + dx] = 4     # facade A, "left"
    facade[100 + dy : 161 + dy, 80 + dx : 121 + dx] = 1    # window patch inside A
    facade[100 + dy : 331 + dy, 300 + dx : 461 + dx] = 6   # facade B, "front"
    lines = [
        Line5Tuple(ln.xs + dx, ln.ys + dy, ln.xe + dx, ln.ye + dy, ln.order)
        for ln in (*GT_LINES_A, GT_LINE_B)
    ]
    floor = rasterize_floor_lines(lines, band_px=band_px, w=W, h=H)
    return LabelMask.from_array(facade), floor


def synthetic_vp_groups(seed: int, noise_sigma: float):
    """Random facade for VP-recovery checks: 3..6 lines through a random
    finite VP, 50 float samples per line, Gaussian noise on y.

    Returns (groups, true_vp).
    """
    rng = np.random.default_rng(seed)
    n_lines = int(rng.integers(3, 7))
    vp = (float(rng.uniform(420, 650)), float(rng.uniform(-220, 40)))
    x_start = float(rng.uniform(0, 60))
    xs = np.linspace(x_start, x_start + 300.0, 50)
    base = float(rng.uniform(-0.75, -0.55))
    groups = []
    for i in range(n_lines):
        beta = base + 0.15 * i
        ys = beta * (xs - vp[0]) + vp[1]
        if noise_sigma > 0:
            ys = ys + noise_sigma * rng.standard_normal(xs.size)
        pixels = frozenset(zip(xs.tolist(), ys.tolist()))
        groups.append(LinePixelGroup(facade_id=1, order=i + 1, pixels=pixels))
    return groups, vp
