import numpy as np
import pytest

from floorline.geometry import LabelMask


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def grid(rows) -> LabelMask:
    """LabelMask from nested lists (row-major)."""
    return LabelMask.from_array(np.array(rows, dtype=np.uint8))


def blank(w: int, h: int) -> np.ndarray:
    return np.zeros((h, w), dtype=np.uint8)


def paint_rect(arr: np.ndarray, x0: int, x1: int, y0: int, y1: int, code: int) -> np.ndarray:
    """Fill the inclusive pixel rectangle [x0..x1] x [y0..y1] with code."""
    arr[y0 : y1 + 1, x0 : x1 + 1] = code
    return arr
