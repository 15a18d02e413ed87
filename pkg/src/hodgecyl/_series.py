"""Truncated power-series (1D jet) arithmetic, vectorized over sample points.

Coefficient arrays have shape (order + 1, *spatial) and hold Taylor
coefficients c_m = f^(m)/m!.  Products are truncated to the common order;
retained coefficients are exact.
"""

from __future__ import annotations

import math

import numpy as np


def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(a.shape[0], b.shape[0])
    out = np.zeros((n,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=np.result_type(a, b))
    for m in range(n):
        for i in range(m + 1):
            out[m] = out[m] + a[i] * b[m - i]
    return out


def series_reciprocal(c: np.ndarray) -> np.ndarray:
    """Coefficients of 1/f given coefficients of f (f(0) != 0)."""
    n = c.shape[0]
    out = np.zeros_like(c)
    out[0] = 1.0 / c[0]
    for m in range(1, n):
        acc = np.zeros_like(c[0])
        for i in range(1, m + 1):
            acc = acc + c[i] * out[m - i]
        out[m] = -acc / c[0]
    return out


def series_sqrt(c: np.ndarray) -> np.ndarray:
    """Coefficients of sqrt(f) given coefficients of f (f(0) > 0)."""
    n = c.shape[0]
    out = np.zeros_like(c)
    out[0] = np.sqrt(c[0])
    for m in range(1, n):
        acc = np.zeros_like(c[0])
        for i in range(1, m):
            acc = acc + out[i] * out[m - i]
        out[m] = (c[m] - acc) / (2.0 * out[0])
    return out


def jet_from_derivatives(derivs: np.ndarray) -> np.ndarray:
    """Convert stacked derivatives f^(m) to Taylor coefficients f^(m)/m!."""
    fact = np.array([math.factorial(m) for m in range(derivs.shape[0])], dtype=float)
    return derivs / fact.reshape((-1,) + (1,) * (derivs.ndim - 1))


def derivatives_from_jet(coeffs: np.ndarray) -> np.ndarray:
    fact = np.array([math.factorial(m) for m in range(coeffs.shape[0])], dtype=float)
    return coeffs * fact.reshape((-1,) + (1,) * (coeffs.ndim - 1))
