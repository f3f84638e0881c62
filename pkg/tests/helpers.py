"""Shared test utilities: finite-difference gradients and error measures."""

from __future__ import annotations

import numpy as np


def numerical_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar-valued ``f`` w.r.t. array ``x``.

    ``f`` takes no arguments and must read ``x`` (mutated in place entry by
    entry) when called.
    """
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + eps
        f_plus = f()
        x[idx] = orig - eps
        f_minus = f()
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * eps)
        it.iternext()
    return grad


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max absolute difference scaled by the numeric gradient's magnitude."""
    scale = max(float(np.abs(numeric).max()), 1e-8)
    return float(np.abs(analytic - numeric).max()) / scale


def brute_force_returns(rewards, final_value: float, gamma: float) -> np.ndarray:
    """Double-loop discounted sums; the independent oracle for backward summation."""
    rewards = np.asarray(rewards, dtype=np.float64)
    horizon = rewards.shape[0]
    out = np.zeros(horizon)
    for t in range(horizon):
        total = 0.0
        for k in range(t, horizon):
            total += gamma ** (k - t) * rewards[k]
        out[t] = total + gamma ** (horizon - t) * final_value
    return out
