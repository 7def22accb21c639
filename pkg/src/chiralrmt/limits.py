"""Reference densities at the two ends of the crossover (mu -> 0 and mu -> 1)."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_2d, integrate_semi_infinite
from .specfun import laguerre


def gue_factorized_density_n2(lam: ArrayLike) -> np.ndarray | float:
    """mu -> 0, N = 2: the singular values of a 2x2 GUE matrix split into two one-level Laguerre blocks.

    rho(l) = 1/2 sqrt(2/pi) e^{-l^2/2} (1 + l^2).
    """
    x = np.asarray(lam, dtype=float)
    out = 0.5 * math.sqrt(2.0 / math.pi) * np.exp(-0.5 * x * x) * (1.0 + x * x)
    return out if out.ndim else float(out)


def lue_density(N: int, lam: ArrayLike) -> np.ndarray | float:
    """mu = 1: singular-value density of W with weight exp(-Tr W W^dag / 2) (Laguerre ensemble, index 0).

    rho(l) = l e^{-l^2/2} sum_{k<N} L_k(l^2/2)^2 / N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    x = np.asarray(lam, dtype=float)
    y = 0.5 * x * x
    s = sum(np.asarray(laguerre(k, 0.0, y)) ** 2 for k in range(N))
    out = x * np.exp(-y) * s / N
    return out if out.ndim else float(out)


def lue_jpdf_n2(l1: ArrayLike, l2: ArrayLike) -> np.ndarray:
    """Unnormalized N = 2 joint density (l1^2 - l2^2)^2 l1 l2 e^{-(l1^2 + l2^2)/2}."""
    a = np.asarray(l1, dtype=float)
    b = np.asarray(l2, dtype=float)
    return (a * a - b * b) ** 2 * a * b * np.exp(-0.5 * (a * a + b * b))


def lue_density_n2_quadrature(lam: ArrayLike, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray | float:
    """N = 2 marginal of the Laguerre jpdf, normalized by its 2-D integral."""
    x = np.atleast_1d(np.asarray(lam, dtype=float))
    norm = float(integrate_2d(lue_jpdf_n2, (0.0, np.inf), (0.0, np.inf), spec, scale=1.5,
                              x_breaks=(2.0, 4.0), y_breaks=(2.0, 4.0)).require())
    marg = integrate_semi_infinite(lambda t: lue_jpdf_n2(x[:, None], t[None, :]), spec, scale=1.5,
                                   breakpoints=(2.0, 4.0))
    out = np.asarray(marg.require()) / norm
    return out if np.ndim(lam) else float(out[0])
