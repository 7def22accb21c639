"""Unitary group integral I(A, B; xi) with Pfaffian weights B_xi / C_xi and a Haar MC oracle.

    I = int dU exp[xi Tr(AU + U^dag B) + 1/2 Tr((AU)^2 + (U^dag B)^2)]

depends only on the singular values a of AB.  All weights are returned
"scaled", i.e. multiplied by exp(-sum of their a^2), so that the exp(-Tr a^2)
prefactor is absorbed entry by entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from .linalg import ContractError, RngStream, pfaffian, sample_haar_unitary
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_2d, integrate_finite, theta_integral
from .specfun import bessel_i0_scaled, bessel_i1_scaled

_TAIL = 10.0  # Gaussian half-width in x and y; exp(-50) tails
_MIN_GAP = 1e-6


class GroupDomainError(ValueError):
    """Degenerate or negative singular values."""


@dataclass(frozen=True)
class GroupIntegralInput:
    """Distinct nonnegative singular values a (any order) and the coupling xi."""

    a: tuple[float, ...]
    xi: float = 0.0

    def __post_init__(self) -> None:
        a = tuple(float(v) for v in np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "a", a)
        if not a:
            raise GroupDomainError("need at least one singular value")
        if min(a) < 0 or not all(np.isfinite(a)) or not np.isfinite(self.xi):
            raise GroupDomainError("singular values must be finite and nonnegative")
        s = np.sort(a)
        if len(s) > 1 and np.min(np.diff(s)) <= _MIN_GAP:
            raise GroupDomainError("singular values must be pairwise distinct (gap > 1e-6)")

    @property
    def N(self) -> int:
        return len(self.a)


# --- weights -----------------------------------------------------------------

def _B0_scaled(ak: float, al: float, spec: QuadratureSpec) -> float:
    """exp(-ak^2-al^2) B_0 = 4 int tan(t) sinh[(al^2-ak^2) sin 2t] I0(2 ak al cos 2t) dt."""
    A = al * al - ak * ak
    Bc = 2.0 * ak * al

    def F(s: np.ndarray, co: np.ndarray) -> np.ndarray:
        u = A * s
        au = np.abs(u)
        bc = Bc * co
        return np.sign(u) * (-0.5 * np.expm1(-2.0 * au)) * bessel_i0_scaled(bc) * np.exp(au + np.abs(bc))

    return 4.0 * float(theta_integral(F, spec).require())


def _Bxi_scaled(xi: float, ak: float, al: float, spec: QuadratureSpec) -> float:
    """Plane form over (u, v) = (x + y, x - y); the bracket is odd in v and vanishes at u = 0."""
    amax = max(ak, al)
    half = 2.0 * (abs(xi) + 2.0 * amax + _TAIL)
    shift = ak * ak + al * al

    def f(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        x = 0.5 * (u + v)
        y = 0.5 * (u - v)
        g = 0.5 * ((x - xi) ** 2 + (y - xi) ** 2) + shift
        ax, ay = np.abs(x), np.abs(y)
        t1 = bessel_i0_scaled(2 * ak * y) * bessel_i0_scaled(2 * al * x) * np.exp(2 * ak * ay + 2 * al * ax - g)
        t2 = bessel_i0_scaled(2 * ak * x) * bessel_i0_scaled(2 * al * y) * np.exp(2 * ak * ax + 2 * al * ay - g)
        return 0.5 * (v / u) * (t1 - t2)

    u_breaks = (0.0,) if -half < 0.0 < half else ()
    inner = QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
    res = integrate_2d(f, (-half, half), (-half, half), inner, x_breaks=u_breaks, y_breaks=(0.0,))
    return float(res.require())


def weight_B_scaled(
    xi: float, ak: float, al: float, spec: QuadratureSpec = DEFAULT_SPEC,
    method: Literal["auto", "theta", "plane"] = "auto",
) -> float:
    """exp(-ak^2 - al^2) B_xi(ak, al); antisymmetric, positive for al > ak at xi = 0."""
    if ak < 0 or al < 0:
        raise GroupDomainError("weight_B needs nonnegative arguments")
    if ak == al:
        return 0.0
    if method == "auto":
        method = "theta" if xi == 0.0 else "plane"
    if method == "theta":
        if xi != 0.0:
            raise ValueError("the theta form only applies at xi = 0")
        return _B0_scaled(ak, al, spec)
    return _Bxi_scaled(xi, ak, al, spec)


def weight_B(xi: float, ak: float, al: float, spec: QuadratureSpec = DEFAULT_SPEC,
             method: Literal["auto", "theta", "plane"] = "auto") -> float:
    return weight_B_scaled(xi, ak, al, spec, method) * math.exp(ak * ak + al * al)


def weight_C_scaled(xi: float, a: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """exp(-a^2) C_xi(a) with C_xi(a) = sqrt(2) int exp(-(x - xi)^2 / 2) I0(2 a x) dx."""
    if a < 0:
        raise GroupDomainError("weight_C needs a nonnegative argument")
    if xi == 0.0:
        # 2 sqrt(pi) I0(a^2), written through the scaled Bessel
        return 2.0 * math.sqrt(math.pi) * float(bessel_i0_scaled(a * a)) * math.exp(a * a)
    half = abs(xi) + 2.0 * a + _TAIL

    def f(x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        return bessel_i0_scaled(2 * a * x) * np.exp(2 * a * ax - 0.5 * (x - xi) ** 2 - a * a)

    res = integrate_finite(f, -half, half, spec, breakpoints=(0.0,))
    return math.sqrt(2.0) * float(res.require())


def weight_C(xi: float, a: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return weight_C_scaled(xi, a, spec) * math.exp(a * a)


# --- assembled integral ------------------------------------------------------

def log_prefactor(N: int) -> float:
    """log prod_{j<N} j! / sqrt(4 pi)."""
    return sum(math.lgamma(j + 1) for j in range(N)) - 0.5 * N * math.log(4 * math.pi)


def skew_weight_matrix(inp: GroupIntegralInput, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Scaled B matrix, bordered by the scaled C column for odd N."""
    a, N = inp.a, inp.N
    n = N + (N % 2)
    M = np.zeros((n, n))
    for k in range(N):
        for l in range(k + 1, N):
            M[k, l] = weight_B_scaled(inp.xi, a[k], a[l], spec)
            M[l, k] = -M[k, l]
    if N % 2:
        for k in range(N):
            M[k, N] = weight_C_scaled(inp.xi, a[k], spec)
            M[N, k] = -M[k, N]
    return M


def group_integral(inp: GroupIntegralInput | ArrayLike, xi: float | None = None,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Pfaffian formula prefactor * exp(-Tr a^2) * Pf[B | C] / Delta_N(a^2)."""
    if not isinstance(inp, GroupIntegralInput):
        inp = GroupIntegralInput(tuple(np.atleast_1d(inp)), 0.0 if xi is None else float(xi))
    elif xi is not None and xi != inp.xi:
        raise ValueError("xi given twice with different values")
    a2 = np.asarray(inp.a) ** 2
    delta = 1.0
    for l in range(inp.N):
        for k in range(l):
            delta *= a2[l] - a2[k]
    pf = pfaffian(skew_weight_matrix(inp, spec))
    return math.exp(log_prefactor(inp.N)) * pf / delta


def mc_group_integral(A: ArrayLike, B: ArrayLike, xi: float, samples: int,
                      rng: RngStream | np.random.Generator, chunk: int = 50_000) -> tuple[float, float]:
    """Haar average of exp[xi Tr(AU + U^dag B) + 1/2 Tr((AU)^2 + (U^dag B)^2)]: (mean, SE) of the real part."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ContractError("A and B must be square matrices of equal size")
    if samples < 2:
        raise ContractError("need at least two samples")
    n = A.shape[0]
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    vals = np.empty(samples)
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        U = sample_haar_unitary(n, gen, m)
        AU = A @ U
        UB = np.swapaxes(U.conj(), -1, -2) @ B
        tr = lambda X: np.trace(X, axis1=-2, axis2=-1)
        expo = xi * (tr(AU) + tr(UB)) + 0.5 * (tr(AU @ AU) + tr(UB @ UB))
        vals[start : start + m] = np.exp(expo).real
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


# --- large-xi limit ----------------------------------------------------------

def leutwyler_smilga_reference(m1: float, m2: float) -> float:
    """[m1 I1(2m1) I0(2m2) - m2 I0(2m1) I1(2m2)] / (m1^2 - m2^2); confluent value I0^2 - I1^2."""
    if m1 < 0 or m2 < 0:
        raise GroupDomainError("masses must be nonnegative")
    i0 = lambda z: float(bessel_i0_scaled(z)) * math.exp(z)
    i1 = lambda z: float(bessel_i1_scaled(z)) * math.exp(z)
    if abs(m1 - m2) < 1e-8 * max(1.0, m1):
        m = 0.5 * (m1 + m2)
        return i0(2 * m) ** 2 - i1(2 * m) ** 2
    return (m1 * i1(2 * m1) * i0(2 * m2) - m2 * i0(2 * m1) * i1(2 * m2)) / (m1 * m1 - m2 * m2)


LS_XI = (20.0, 40.0, 80.0)


def leutwyler_smilga_check(m1: float, m2: float, spec: QuadratureSpec | None = None,
                           xis: tuple[float, ...] = LS_XI) -> tuple[float, float]:
    """Richardson extrapolation in 1/xi^2 of I(a = m / xi; xi) for N = 2, and the Bessel reference.

    The finite-xi corrections are a power series in 1/xi^2, so halving steps
    in 1/xi eliminate them order by order.
    """
    if m1 == m2 or m1 < 0 or m2 < 0:
        raise GroupDomainError("need distinct nonnegative masses")
    spec = spec or QuadratureSpec(1e-13, 1e-11, 60)
    vals = [group_integral([m1 / x, m2 / x], x, spec) for x in xis]
    # Neville recursion for the polynomial in h = 1/xi^2, evaluated at h = 0
    table = list(vals)
    for k in range(1, len(xis)):
        q = [(xis[i + k] / xis[i]) ** 2 for i in range(len(table) - 1)]
        table = [(r2 * qi - r1) / (qi - 1.0) for qi, r1, r2 in zip(q, table[:-1], table[1:])]
    return float(table[0]), leutwyler_smilga_reference(m1, m2)
