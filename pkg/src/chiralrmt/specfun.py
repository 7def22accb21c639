"""Scaled special functions: modified Bessel, Laguerre, monic Hermite."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy import special


def bessel_i0_scaled(x: ArrayLike) -> np.ndarray | float:
    """Return exp(-|x|) * I0(x)."""
    out = special.i0e(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def bessel_i1_scaled(x: ArrayLike) -> np.ndarray | float:
    """Return exp(-|x|) * I1(x); odd in x."""
    out = special.i1e(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def laguerre(n: int, alpha: float, y: ArrayLike) -> np.ndarray | float:
    """Generalized Laguerre L_n^(alpha)(y) by forward recurrence."""
    if n < 0:
        raise ValueError("laguerre: n must be nonnegative")
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - y
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - y) * cur - (k + alpha) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def hermite_monic(n: int, x: ArrayLike) -> np.ndarray | float:
    """Probabilists' Hermite He_n(x), monic."""
    if n < 0:
        raise ValueError("hermite_monic: n must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


def laguerre_coeffs(n: int, alpha: float = 0.0) -> np.ndarray:
    """Ascending power coefficients of L_n^(alpha)(y)."""
    # c_k = (-1)^k binom(n + alpha, n - k) / k!
    coeffs = np.empty(n + 1)
    for k in range(n + 1):
        coeffs[k] = (-1) ** k * special.binom(n + alpha, n - k) / special.factorial(k)
    return coeffs


def hermite_monic_coeffs(n: int) -> np.ndarray:
    """Ascending power coefficients of He_n(x)."""
    prev = np.array([1.0])
    if n == 0:
        return prev
    cur = np.array([0.0, 1.0])
    for k in range(1, n):
        nxt = np.zeros(k + 2)
        nxt[1:] = cur
        nxt[: k] -= k * prev
        prev, cur = cur, nxt
    return cur
