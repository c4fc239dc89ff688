"""Regularized lower incomplete gamma function, vectorized.

Series expansion below ``x = a + 1`` and a modified-Lentz continued fraction
for the complement above it (Numerical Recipes, ch. 6.2).
"""
from __future__ import annotations

import math

import numpy as np

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 500


def _series(a: float, x: np.ndarray) -> np.ndarray:
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if np.all(np.abs(term) <= np.abs(total) * _EPS):
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * np.exp(-x + a * np.log(x) - math.lgamma(a))


def _continued_fraction(a: float, x: np.ndarray) -> np.ndarray:
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        step = d * c
        h = h * step
        if np.all(np.abs(step - 1.0) <= _EPS):
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return np.exp(-x + a * np.log(x) - math.lgamma(a)) * h


def gammainc_lower(a: float, x):
    """P(a, x) = gamma(a, x) / Gamma(a) for ``a > 0`` and ``x >= 0``."""
    if not a > 0.0:
        raise ValueError("a must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("x must be nonnegative")
    flat = np.atleast_1d(x).ravel()
    out = np.zeros_like(flat)
    low = (flat > 0.0) & (flat < a + 1.0)
    high = flat >= a + 1.0
    if low.any():
        out[low] = _series(a, flat[low])
    if high.any():
        out[high] = 1.0 - _continued_fraction(a, flat[high])
    out = out.reshape(x.shape)
    return float(out) if out.ndim == 0 else out
