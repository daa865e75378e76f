"""Finite-difference verification of the attention kernel's gradients.

Central differences with a configurable epsilon, compared entry-by-entry
against the analytic backward pass. The reported error is
|analytic - numeric| / max(1, |analytic|, |numeric|), maximized over entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import FeatureMap, HaParams, LabelMask, ha_backward, ha_forward, softmax_cross_entropy

DEFAULT_EPS = 1e-5
DEFAULT_TOL = 1e-5


def central_diff_grad(f, x: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Central finite-difference gradient of scalar f at x, entry by entry."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros(x.size)
    flat = x.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        grad[i] = (hi - lo) / (2.0 * eps)
    return grad.reshape(x.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


@dataclass(frozen=True)
class GradCheckResult:
    name: str
    seed: int
    max_error: float


def check_ha_instance(seed: int, eps: float = DEFAULT_EPS) -> GradCheckResult:
    """One randomized height-attention instance: every input and parameter
    gradient against central differences of sum(upstream * refined)."""
    rng = np.random.default_rng(seed)
    c_l = int(rng.integers(1, 4))
    c_h = int(rng.integers(1, 4))
    h_l = int(rng.integers(2, 7))
    h_h = int(rng.integers(1, 7))  # 1 covers the degenerate interpolation branch
    w_l = int(rng.integers(1, 5))
    w_h = int(rng.integers(1, 5))
    k = int(rng.choice([1, 3, 5]))

    lower = rng.standard_normal((c_l, h_l, w_l))
    higher = rng.standard_normal((c_h, h_h, w_h))
    kernel = rng.standard_normal((c_h, c_l, k))
    bias = rng.standard_normal(c_h)
    upstream = rng.standard_normal((c_h, h_h, w_h))

    def objective(lw, hg, kn, bs) -> float:
        refined, _, _ = ha_forward(FeatureMap(lw), FeatureMap(hg), HaParams(kn, bs))
        return float(np.sum(upstream * refined.values))

    refined, _, cache = ha_forward(FeatureMap(lower), FeatureMap(higher), HaParams(kernel, bias))
    g_lower, g_higher, g_params = ha_backward(cache, FeatureMap(upstream))

    worst = 0.0
    pairs = [
        (g_lower.values, lambda a: objective(a, higher, kernel, bias), lower),
        (g_higher.values, lambda a: objective(lower, a, kernel, bias), higher),
        (g_params.kernel, lambda a: objective(lower, higher, a, bias), kernel),
        (g_params.bias, lambda a: objective(lower, higher, kernel, a), bias),
    ]
    for analytic, f, x in pairs:
        numeric = central_diff_grad(f, x, eps)
        worst = max(worst, relative_error(analytic, numeric))
    return GradCheckResult("height-attention", seed, worst)


def check_softmax_instance(seed: int, eps: float = DEFAULT_EPS) -> GradCheckResult:
    """One randomized softmax-cross-entropy instance against central differences."""
    rng = np.random.default_rng(seed)
    c = int(rng.integers(2, 5))
    h = int(rng.integers(1, 4))
    w = int(rng.integers(1, 4))
    logits = rng.standard_normal((c, h, w))
    target = LabelMask(w, h, rng.integers(0, c, size=(h, w)))

    def objective(z) -> float:
        loss, _ = softmax_cross_entropy(FeatureMap(z), target)
        return loss

    _, analytic = softmax_cross_entropy(FeatureMap(logits), target)
    numeric = central_diff_grad(objective, logits, eps)
    return GradCheckResult("softmax-cross-entropy", seed, relative_error(analytic.values, numeric))


def run_suite(base_seed: int, instances: int = 20, eps: float = DEFAULT_EPS) -> list[GradCheckResult]:
    """The full randomized gradient-check suite (attention + loss)."""
    results = []
    for i in range(instances):
        results.append(check_ha_instance(base_seed + i, eps))
        results.append(check_softmax_instance(base_seed + 10_000 + i, eps))
    return results
