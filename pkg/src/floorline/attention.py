"""Desk-scale height-attention layer, fused segmentation loss, and heatmaps.

The attention layer gates a higher-level feature map row-by-row from the
vertical profile of a lower-level map:

  1. width-wise mean pooling of the lower map      -> (C_l, H_l)
  2. 1-D convolution over height, zero same-pad    -> (C_h, H_l)
  3. linear interpolation over height to H_h       -> (C_h, H_h)
  4. sigmoid                                       -> attention in (0, 1)
  5. refined[c, h, w] = attention[c, h] * higher[c, h, w]

Nothing here trains; the point is that the mechanism's math is executable and
gradient-verified at toy scale. ha_backward returns the exact reverse-mode
gradients of the composition above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, LabelOutOfRange, StaleCache
from .geometry import MAX_FLOOR_ORDER, LabelMask
from .stats import bound_row_ranges


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """C x H x W real-valued feature tensor."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"feature map must be (C, H, W) with positive dims, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature map values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class HaParams:
    """1-D height-convolution weights: kernel (C_out, C_in, k) with odd k, bias (C_out,)."""

    kernel: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64)
        if kernel.ndim != 3:
            raise ValueError(f"kernel must be (C_out, C_in, k), got shape {kernel.shape}")
        if kernel.shape[2] % 2 != 1:
            raise ValueError(f"kernel size must be odd, got {kernel.shape[2]}")
        if bias.shape != (kernel.shape[0],):
            raise ValueError("bias length must equal the number of output channels")
        if not (np.all(np.isfinite(kernel)) and np.all(np.isfinite(bias))):
            raise ValueError("parameters must be finite")
        kernel.flags.writeable = False
        bias.flags.writeable = False
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "bias", bias)

    @classmethod
    def zeros(cls, c_out: int, c_in: int, k: int = 3) -> "HaParams":
        return cls(np.zeros((c_out, c_in, k)), np.zeros(c_out))


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """C x H per-row gating weights, strictly inside (0, 1)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise ValueError(f"attention map must be (C, H), got shape {arr.shape}")
        if not np.all((arr > 0.0) & (arr < 1.0)):
            raise ValueError("attention weights must lie strictly inside (0, 1)")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, eq=False)
class HaCache:
    """Forward intermediates needed by ha_backward; owned by the caller."""

    lower: FeatureMap
    higher: FeatureMap
    params: HaParams
    pooled: np.ndarray       # (C_l, H_l)
    interp_src: np.ndarray   # (H_h,) fractional source rows of the interpolation
    attention: np.ndarray    # (C_h, H_h)


def _interp_positions(h_in: int, h_out: int) -> np.ndarray:
    # endpoints map onto endpoints; a single output row reads the first input row
    if h_out == 1:
        return np.zeros(1)
    return np.arange(h_out, dtype=np.float64) * (h_in - 1) / (h_out - 1)


def _conv1d_same(signal: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """(C_in, H) -> (C_out, H) height convolution with zero same-padding."""
    c_out, c_in, k = kernel.shape
    pad = k // 2
    h = signal.shape[1]
    padded = np.zeros((c_in, h + 2 * pad))
    padded[:, pad : pad + h] = signal
    out = np.empty((c_out, h))
    for t in range(k):
        window = padded[:, t : t + h]                       # (C_in, H)
        if t == 0:
            out[:] = np.tensordot(kernel[:, :, t], window, axes=(1, 0))
        else:
            out += np.tensordot(kernel[:, :, t], window, axes=(1, 0))
    return out + bias[:, None]


def ha_forward(
    lower: FeatureMap, higher: FeatureMap, params: HaParams
) -> tuple[FeatureMap, AttentionMap, HaCache]:
    """Run the height-attention layer; see the module docstring for the steps."""
    c_out, c_in, _ = params.kernel.shape
    if lower.channels != c_in:
        raise DimensionMismatch(
            f"lower map has {lower.channels} channels, kernel expects {c_in}"
        )
    if higher.channels != c_out:
        raise DimensionMismatch(
            f"higher map has {higher.channels} channels, kernel produces {c_out}"
        )

    pooled = lower.values.mean(axis=2)                       # (C_l, H_l)
    conv = _conv1d_same(pooled, params.kernel, params.bias)  # (C_h, H_l)

    src = _interp_positions(lower.height, higher.height)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, lower.height - 1)
    frac = src - i0
    interp = conv[:, i0] * (1.0 - frac) + conv[:, i1] * frac  # (C_h, H_h)

    attention = 1.0 / (1.0 + np.exp(-interp))
    refined = attention[:, :, None] * higher.values

    cache = HaCache(lower, higher, params, pooled, src, attention)
    return FeatureMap(refined), AttentionMap(attention), cache


def ha_backward(
    cache: HaCache, grad_refined: FeatureMap
) -> tuple[FeatureMap, FeatureMap, HaParams]:
    """Exact gradients of the forward composition wrt lower, higher, params."""
    if grad_refined.values.shape != cache.higher.values.shape:
        raise StaleCache(
            f"upstream gradient shape {grad_refined.values.shape} does not match "
            f"the cached forward output {cache.higher.values.shape}"
        )
    g = grad_refined.values
    att = cache.attention

    grad_higher = att[:, :, None] * g
    grad_att = np.sum(g * cache.higher.values, axis=2)       # (C_h, H_h)
    grad_interp = grad_att * att * (1.0 - att)

    # interpolation backward: scatter each output row onto its two source rows
    h_in = cache.lower.height
    src = cache.interp_src
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, h_in - 1)
    frac = src - i0
    grad_conv = np.zeros((att.shape[0], h_in))
    np.add.at(grad_conv.T, i0, (grad_interp * (1.0 - frac)).T)
    np.add.at(grad_conv.T, i1, (grad_interp * frac).T)

    # convolution backward
    kernel = cache.params.kernel
    c_out, c_in, k = kernel.shape
    pad = k // 2
    h = h_in
    padded = np.zeros((c_in, h + 2 * pad))
    padded[:, pad : pad + h] = cache.pooled
    grad_kernel = np.empty_like(kernel)
    grad_padded = np.zeros_like(padded)
    for t in range(k):
        window = padded[:, t : t + h]
        grad_kernel[:, :, t] = grad_conv @ window.T
        grad_padded[:, t : t + h] += np.tensordot(kernel[:, :, t], grad_conv, axes=(0, 0))
    grad_bias = grad_conv.sum(axis=1)
    grad_pooled = grad_padded[:, pad : pad + h]

    # mean pooling backward: spread evenly across the width
    w = cache.lower.width
    grad_lower = np.repeat(grad_pooled[:, :, None] / w, w, axis=2)

    return (
        FeatureMap(grad_lower),
        FeatureMap(grad_higher),
        HaParams(grad_kernel, grad_bias),
    )


def softmax_cross_entropy(logits: FeatureMap, target: LabelMask) -> tuple[float, FeatureMap]:
    """Mean per-pixel softmax cross entropy plus its analytic logits gradient."""
    c, h, w = logits.values.shape
    if (target.height, target.width) != (h, w):
        raise DimensionMismatch(
            f"target is {target.width}x{target.height}, logits are {w}x{h}"
        )
    labels = target.labels.astype(np.int64)
    if int(labels.max(initial=0)) >= c:
        raise LabelOutOfRange(
            f"target label {int(labels.max())} needs more than {c} channels"
        )

    z = logits.values - logits.values.max(axis=0, keepdims=True)
    ez = np.exp(z)
    probs = ez / ez.sum(axis=0, keepdims=True)

    n = h * w
    rows, cols = np.indices((h, w))
    nll = -(z[labels, rows, cols] - np.log(ez.sum(axis=0)))
    loss = float(nll.sum() / n)

    grad = probs.copy()
    grad[labels, rows, cols] -= 1.0
    grad /= n
    return loss, FeatureMap(grad)


def fused_loss(
    fa_logits: FeatureMap,
    fa_target: LabelMask,
    fl_logits: FeatureMap,
    fl_target: LabelMask,
) -> float:
    """Unweighted sum of the facade and floor-line branch cross entropies."""
    fa, _ = softmax_cross_entropy(fa_logits, fa_target)
    fl, _ = softmax_cross_entropy(fl_logits, fl_target)
    return fa + fl


def height_heatmap(source, n_bounds: int = 10) -> np.ndarray:
    """Order-by-bound intensity grid, normalized by its own maximum.

    For a floor LabelMask, cell (m, n) counts order-(m+1) pixels inside
    vertical bound n; for an AttentionMap, cell (m, n) averages channel m over
    bound n. Bound 0 is the bottom of the image (or of the attention height).
    """
    if isinstance(source, LabelMask):
        grid = np.zeros((MAX_FLOOR_ORDER, n_bounds))
        for b, (lo, hi) in enumerate(bound_row_ranges(source.height, n_bounds)):
            if hi > lo:
                counts = np.bincount(source.labels[lo:hi].reshape(-1), minlength=256)
                grid[:, b] = counts[1 : MAX_FLOOR_ORDER + 1]
    elif isinstance(source, AttentionMap):
        c, h = source.values.shape
        grid = np.zeros((c, n_bounds))
        for b, (lo, hi) in enumerate(bound_row_ranges(h, n_bounds)):
            if hi > lo:
                grid[:, b] = source.values[:, lo:hi].mean(axis=1)
    else:
        raise TypeError(f"expected LabelMask or AttentionMap, got {type(source).__name__}")
    peak = grid.max()
    if peak > 0:
        grid = grid / peak
    return grid
