"""Adaptive Gauss-Legendre quadrature on finite, semi-infinite and 2-D domains.

Integrands are vectorized: ``f(x)`` receives a 1-D array of nodes of shape
``(m,)`` and returns an array of shape ``(..., m)``.  Leading axes are a batch
of integrals computed together; the panel refinement is shared by the batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "QuadratureError",
    "SingularityError",
    "integrate_finite",
    "integrate_semi_infinite",
    "integrate_2d",
    "theta_integral",
    "gauss_legendre",
    "THETA_GUARD",
]

THETA_GUARD = 1e-4
_ORDER = 15
_MAX_WORK = 250_000  # panels x batch size
_ROUNDOFF = 50 * np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Numerical non-convergence surfaced to a caller that requires success."""


class SingularityError(ValueError):
    """theta_integral received an F that does not vanish at sin(2 theta) = 0."""


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 60

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray | float
    error_estimate: np.ndarray | float
    converged: bool

    def require(self) -> np.ndarray | float:
        if not self.converged:
            raise QuadratureError(
                f"quadrature did not converge (error estimate {np.max(self.error_estimate):.3g})"
            )
        return self.value


DEFAULT_SPEC = QuadratureSpec()

_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    if n not in _cache:
        _cache[n] = np.polynomial.legendre.leggauss(n)
    return _cache[n]


def _rule(f: Callable, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Panel integrals of f and of |f|."""
    x0, w0 = gauss_legendre(_ORDER)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * x0
    y = np.asarray(f(x.ravel()), dtype=float)
    y = y.reshape(y.shape[:-1] + x.shape)
    return (y @ w0) * half, (np.abs(y) @ w0) * np.abs(half)


def _scalarize(v: np.ndarray) -> np.ndarray | float:
    return float(v) if np.ndim(v) == 0 else v


def _adaptive(f: Callable, breaks: np.ndarray, spec: QuadratureSpec):
    a = breaks[:-1].astype(float)
    b = breaks[1:].astype(float)
    length = float(breaks[-1] - breaks[0])
    coarse, _ = _rule(f, a, b)
    batch = max(1, int(np.prod(coarse.shape[:-1])))
    value = np.zeros(coarse.shape[:-1])
    error = np.zeros(coarse.shape[:-1])
    converged = True
    for depth in range(spec.max_subdivisions + 1):
        m = 0.5 * (a + b)
        halves, mags = _rule(f, np.concatenate([a, m]), np.concatenate([m, b]))
        p = a.size
        left, right = halves[..., :p], halves[..., p:]
        fine = left + right
        err = np.abs(fine - coarse)
        total = value + fine.sum(-1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        share = (b - a) / length
        # a panel is done when within its share of the tolerance or at the roundoff floor
        floor = _ROUNDOFF * (mags[..., :p] + mags[..., p:])
        ok = (err <= np.maximum(tol[..., None] * share, floor)).reshape(-1, p).all(axis=0)
        if np.all(error + err.sum(-1) <= tol):
            ok[:] = True
        if depth == spec.max_subdivisions or 2 * (p - ok.sum()) * batch > _MAX_WORK:
            converged = bool(ok.all())
            ok[:] = True
        value = value + fine[..., ok].sum(-1)
        error = error + err[..., ok].sum(-1)
        if ok.all():
            break
        bad = ~ok
        a_b, m_b, b_b = a[bad], m[bad], b[bad]
        a = np.concatenate([a_b, m_b])
        b = np.concatenate([m_b, b_b])
        coarse = np.concatenate([left[..., bad], right[..., bad]], axis=-1)
    return value, error, converged


def integrate_finite(
    f: Callable,
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """Adaptive integral of f over [a, b] (optionally pre-split at breakpoints)."""
    if not a < b:
        raise ValueError("integrate_finite requires a < b")
    inner = [x for x in sorted(breakpoints) if a < x < b]
    breaks = np.array([a, *inner, b], dtype=float)
    value, error, ok = _adaptive(f, breaks, spec)
    return QuadratureResult(_scalarize(value), _scalarize(error), ok)


def semi_infinite_cutoff(scale: float = 1.0) -> float:
    # exp(-L^2 / (2 scale^2)) = 1e-18
    return scale * np.sqrt(2.0 * np.log(1e18))


def integrate_semi_infinite(
    f: Callable,
    spec: QuadratureSpec = DEFAULT_SPEC,
    scale: float = 1.0,
    cutoff: float | None = None,
    breakpoints: Sequence[float] = (),
) -> QuadratureResult:
    """Integral over [0, inf) for integrands with a Gaussian envelope of width `scale`.

    The tail beyond the cutoff is bounded with the Gaussian Mills ratio and
    added to the error estimate.
    """
    cut = semi_infinite_cutoff(scale) if cutoff is None else float(cutoff)
    if not breakpoints:
        breakpoints = tuple(np.linspace(0.0, cut, 5)[1:-1])
    res = integrate_finite(f, 0.0, cut, spec, breakpoints)
    edge = np.abs(np.asarray(f(np.array([cut])), dtype=float))[..., 0]
    tail = edge * scale**2 / cut
    return QuadratureResult(res.value, _scalarize(np.asarray(res.error_estimate) + tail), res.converged)


def _domain(rng: tuple[float, float], scale: float) -> tuple[float, float]:
    lo, hi = rng
    if np.isinf(hi):
        hi = lo + semi_infinite_cutoff(scale)
    if np.isinf(lo):
        lo = hi - semi_infinite_cutoff(scale)
    return float(lo), float(hi)


def integrate_2d(
    f: Callable,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    spec: QuadratureSpec = DEFAULT_SPEC,
    scale: float = 1.0,
    x_breaks: Sequence[float] = (),
    y_breaks: Sequence[float] = (),
) -> QuadratureResult:
    """Iterated adaptive integral of f(x, y) over a product domain.

    ``f(x, y)`` receives broadcastable arrays of shapes (m, 1) and (1, n) and
    returns (..., m, n).  Infinite ends are truncated at the Gaussian cutoff.
    """
    x0, x1 = _domain(x_range, scale)
    y0, y1 = _domain(y_range, scale)
    inner_spec = QuadratureSpec(spec.abs_tol * 0.1, spec.rel_tol * 0.1, spec.max_subdivisions)
    flags = []
    inner_err: list[np.ndarray] = []

    def outer(x: np.ndarray) -> np.ndarray:
        r = integrate_finite(lambda y: f(x[:, None], y[None, :]), y0, y1, inner_spec, y_breaks)
        flags.append(r.converged)
        inner_err.append(np.max(r.error_estimate))
        return np.asarray(r.value)

    res = integrate_finite(outer, x0, x1, spec, x_breaks)
    err = np.asarray(res.error_estimate) + (x1 - x0) * max(inner_err, default=0.0)
    return QuadratureResult(res.value, _scalarize(err), res.converged and all(flags))


def theta_integral(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    spec: QuadratureSpec = DEFAULT_SPEC,
    guard: float = THETA_GUARD,
) -> QuadratureResult:
    """Compute the integral over [0, pi] of tan(t) * F(sin 2t, cos 2t).

    F must vanish linearly at sin 2t = 0 so that t = pi/2 is removable.  Inside
    |t - pi/2| < guard the integrand is replaced by the two-term even series
    phi0 + phi2 (t - pi/2)^2 fitted from the symmetric pairs at guard and
    guard/2 (odd terms integrate to zero); panels are split at pi/4, pi/2, 3pi/4.
    """
    half = np.pi / 2

    def integrand(t: np.ndarray) -> np.ndarray:
        return np.tan(t) * np.asarray(F(np.sin(2 * t), np.cos(2 * t)))

    edge_t = np.array([half - guard, half + guard, half - guard / 2, half + guard / 2])
    edge_vals = integrand(edge_t)
    at_pole = np.asarray(F(np.zeros(1), -np.ones(1)))[..., 0]
    scale_F = np.max(np.abs(edge_vals)) * guard
    if np.max(np.abs(at_pole)) > 1e-6 * scale_F + 1e-300:
        raise SingularityError("F does not vanish at sin(2 theta) = 0; tan(theta) pole is not removable")
    a_full = 0.5 * (edge_vals[..., 0] + edge_vals[..., 1])
    a_half = 0.5 * (edge_vals[..., 2] + edge_vals[..., 3])
    window = 2.0 * guard * (a_full - 8.0 / 9.0 * (a_full - a_half))
    left = integrate_finite(integrand, 0.0, half - guard, spec, (np.pi / 4,))
    right = integrate_finite(integrand, half + guard, np.pi, spec, (3 * np.pi / 4,))
    value = np.asarray(left.value) + np.asarray(right.value) + window
    err = np.asarray(left.error_estimate) + np.asarray(right.error_estimate)
    return QuadratureResult(_scalarize(value), _scalarize(err), left.converged and right.converged)
