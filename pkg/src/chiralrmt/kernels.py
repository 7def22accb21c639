"""Correlation kernels K_N, G_N, W_N, level density, k-point correlations, partition functions.

The x-integrals of the two-point weight against the polynomials are taken
through the closed moments M_a(l) = int G(l, x) x^(2a) dx, so that
    T_j(l) = int w(l, x) q~_j(x^2) dx,   U_j(l) = int w(l, x) q_j(x^2) dx
are finite combinations of M_a.  Near mu = 1 these combinations cancel by a
factor (1 - mu^2)^(2j); the moments are then computed in extended precision.
Arrays below are float arrays or object arrays of mpmath numbers; the same
arithmetic serves both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import mpmath
import numpy as np
from numpy.typing import ArrayLike

from . import ensemble as ens
from .ensemble import Coupling
from .linalg import pfaffian
from .polynomials import PolynomialCoeffs, q_coeffs_generic, q_tilde_coeffs_generic, q as q_poly, q_tilde as qt_poly
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_2d, integrate_semi_infinite

Precision = Literal["auto", "double", "extended"]

# moments are needed much tighter than the default user tolerance
MOMENT_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=60)
MAX_DOUBLE_LOSS = 3.0


class DegenerateMassError(ValueError):
    pass


def _horner(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y) + coeffs[-1]
    for cf in coeffs[-2::-1]:
        out = out * y + cf
    return out


@dataclass(frozen=True)
class KernelSet:
    N: int
    coupling: Coupling
    spec: QuadratureSpec = field(default=DEFAULT_SPEC)
    c_tilde: float = 0.0
    precision: Precision = "auto"

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.N >= 2:
            ens._require_interior(self.coupling)

    # --- tables -------------------------------------------------------------
    @property
    def odd(self) -> bool:
        return self.N % 2 == 1

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(range(self.N % 2, self.N - 1, 2))

    @property
    def amax(self) -> int:
        return self.indices[-1] + 1 if self.indices else 0

    def digit_loss(self) -> float:
        """Estimated decimal digits cancelled in the moment combinations."""
        if not self.indices:
            return 0.0
        return -2 * self.indices[-1] * math.log10(1.0 - self.coupling.mu2)

    @cached_property
    def extended(self) -> bool:
        if self.precision == "auto":
            return self.digit_loss() > MAX_DOUBLE_LOSS
        return self.precision == "extended"

    @cached_property
    def dps(self) -> int:
        return int(20 + math.ceil(self.digit_loss()))

    @cached_property
    def mp_degree(self) -> int:
        # Gauss-Legendre level of the mp theta rule (3 * 2^(d-1) nodes per quarter panel);
        # the integrand sharpens as mu decreases
        mu = self.coupling.mu
        return 4 if mu >= 0.6 else 5 if mu >= 0.4 else 6

    def polys(self) -> list[tuple[PolynomialCoeffs, PolynomialCoeffs, float]]:
        return [(q_poly(j, self.coupling), qt_poly(j, self.coupling, self.c_tilde), ens.h(j, self.coupling))
                for j in self.indices]

    @cached_property
    def _tables(self):
        """(q coeffs, q~ coeffs, 1/h) per index, as float or mp object arrays."""
        mu = self.coupling.mu
        if not self.extended:
            tab = [(q.coeffs, qt.coeffs, 1.0 / hj) for q, qt, hj in self.polys()]
            return tab
        with mpmath.workdps(self.dps):
            mu2 = mpmath.mpf(mu) ** 2
            tab = []
            for j in self.indices:
                qc = np.array(q_coeffs_generic(j, mu2), dtype=object)
                qtc = np.array(q_tilde_coeffs_generic(j, mu2, mpmath.mpf(self.c_tilde)), dtype=object)
                hj = 4 * mpmath.pi * mu2 * (1 - mu2) ** (2 * j + 1) * mpmath.factorial(j) * mpmath.factorial(j + 1)
                tab.append((qc, qtc, 1 / hj))
            return tab

    # --- moments ------------------------------------------------------------
    def _moments(self, lam: np.ndarray) -> np.ndarray:
        """int w(l, x) x^(2a) dx for a = 0..amax, w = G or G~; shape (amax+1, m)."""
        c = self.coupling
        A = self.amax
        if not self.extended:
            M = ens.weight_moments(lam, A, c, MOMENT_SPEC)
            if self.odd:
                S0 = ens.monomial_skew_row(A, c, MOMENT_SPEC)
                r = ens.g_moments(A, c)
                g = ens.weight_g(lam, c)
                M = M - np.outer(S0, g) / ens.gbar(c) + np.outer(r, -M[0]) / ens.gbar(c)
            return M
        with mpmath.workdps(self.dps):
            M = np.array(ens.weight_moments_mp(lam, A, c.mu, self.dps, self.mp_degree), dtype=object)
            if self.odd:
                S0 = np.array(ens.monomial_skew_row_mp(A, c.mu, self.dps, self.mp_degree), dtype=object)
                r = np.array(ens.g_moments_mp(A, c.mu, self.dps), dtype=object)
                g = np.array([ens.weight_g_mp(x, c.mu, self.dps) for x in lam], dtype=object)
                gb = 2 * mpmath.sqrt(mpmath.pi) * mpmath.mpf(c.mu)
                M = M - np.outer(S0, g) / gb + np.outer(r, -M[0]) / gb
            return M

    def _TU(self, lam: np.ndarray) -> tuple[list, list]:
        M = self._moments(lam)
        T, U = [], []
        for qc, qtc, _ in self._tables:
            T.append(qtc @ M[: len(qtc)])
            U.append(qc @ M[: len(qc)])
        return T, U

    def _g_over_gbar(self, lam: np.ndarray) -> np.ndarray:
        c = self.coupling
        if not self.extended:
            return np.asarray(ens.weight_g(lam, c)) / ens.gbar(c)
        gb = 2 * mpmath.sqrt(mpmath.pi) * mpmath.mpf(c.mu)
        return np.array([ens.weight_g_mp(x, c.mu, self.dps) / gb for x in lam], dtype=object)

    def _y(self, lam: np.ndarray) -> np.ndarray:
        if not self.extended:
            return lam * lam
        return np.array([mpmath.mpf(x) ** 2 for x in lam], dtype=object)

    @staticmethod
    def _out(v: np.ndarray, shape) -> np.ndarray | float:
        v = np.asarray(v.astype(float) if v.dtype == object else v, dtype=float).reshape(shape)
        return v if v.ndim else float(v)

    # --- kernels --------------------------------------------------------------
    def K(self, l1: ArrayLike, l2: ArrayLike) -> np.ndarray | float:
        """Polynomial kernel sum; antisymmetric."""
        a, b = np.broadcast_arrays(np.asarray(l1, float), np.asarray(l2, float))
        shape = a.shape
        a, b = a.ravel(), b.ravel()
        with mpmath.workdps(self.dps):
            y1, y2 = self._y(a), self._y(b)
            out = np.zeros(a.shape, dtype=object if self.extended else float)
            for qc, qtc, ih in self._tables:
                out = out + (_horner(qc, y2) * _horner(qtc, y1) - _horner(qc, y1) * _horner(qtc, y2)) * ih
            return self._out(out, shape)

    def G(self, l1: ArrayLike, l2: ArrayLike) -> np.ndarray | float:
        """G_N(l1, l2) = int w(l1, x) K_N(x, l2) dx (+ g(l1)/g-bar for odd N)."""
        a, b = np.broadcast_arrays(np.asarray(l1, float), np.asarray(l2, float))
        shape = a.shape
        a, b = a.ravel(), b.ravel()
        with mpmath.workdps(self.dps):
            out = self._g_over_gbar(a) if self.odd else np.zeros(a.shape, dtype=object if self.extended else float)
            if self.indices:
                T, U = self._TU(a)
                y2 = self._y(b)
                for (qc, qtc, ih), Tj, Uj in zip(self._tables, T, U):
                    out = out + (_horner(qc, y2) * Tj - _horner(qtc, y2) * Uj) * ih
            return self._out(out, shape)

    def two_point_weight(self, l1, l2):
        fn = ens.weight_Gtilde if self.odd else ens.weight_G
        return fn(l1, l2, self.coupling, MOMENT_SPEC)

    def W(self, l1: ArrayLike, l2: ArrayLike) -> np.ndarray | float:
        """W_N(l1, l2) = w(l1, l2) + int int w(x1, l1) w(x2, l2) K_N(x1, x2)."""
        a, b = np.broadcast_arrays(np.asarray(l1, float), np.asarray(l2, float))
        shape = a.shape
        a, b = a.ravel(), b.ravel()
        w = np.asarray(self.two_point_weight(a, b), dtype=float)
        if not self.indices:
            return self._out(w, shape)
        with mpmath.workdps(self.dps):
            T1, U1 = self._TU(a)
            T2, U2 = self._TU(b)
            acc = np.zeros(a.shape, dtype=object if self.extended else float)
            for (_, _, ih), t1, u1, t2, u2 in zip(self._tables, T1, U1, T2, U2):
                acc = acc + (t1 * u2 - u1 * t2) * ih
            return self._out(np.asarray(self._out(acc, a.shape)) + w, shape)

    def level_density(self, lam: ArrayLike) -> np.ndarray | float:
        lam = np.asarray(lam, float)
        out = np.asarray(self.G(lam, lam)) / self.N
        return out if out.ndim else float(out)

    # --- quadrature oracles ---------------------------------------------------
    def G_quadrature(self, l1: float, l2: float) -> float:
        """Direct semi-infinite quadrature of w(l1, x) K_N(x, l2)."""
        res = integrate_semi_infinite(
            lambda x: np.asarray(self.two_point_weight(l1, x)) * np.asarray(self.K(x, l2)),
            self.spec, breakpoints=(1.0, 2.5, 4.5))
        extra = float(ens.weight_g(l1, self.coupling)) / ens.gbar(self.coupling) if self.odd else 0.0
        return float(res.require()) + extra

    def W_quadrature(self, l1: float, l2: float) -> float:
        """Direct 2-D quadrature of the double integral in W_N."""
        res = integrate_2d(
            lambda x1, x2: np.asarray(self.two_point_weight(x1, l1)) * np.asarray(self.two_point_weight(x2, l2))
            * np.asarray(self.K(x1, x2)),
            (0.0, np.inf), (0.0, np.inf), self.spec, x_breaks=(1.0, 2.5, 4.5), y_breaks=(1.0, 2.5, 4.5))
        return float(np.asarray(self.two_point_weight(l1, l2))) + float(res.require())

    # --- correlations ---------------------------------------------------------
    def correlation(self, points: Sequence[float]) -> float:
        """k-point correlation (-1)^(k(k-1)/2) Pf[[W, G], [-G^T, K]]."""
        x = np.asarray(points, dtype=float)
        k = x.size
        if k < 1:
            raise ValueError("need at least one point")
        if k > self.N:
            return 0.0
        if len(np.unique(x)) < k:
            return 0.0
        if k == 1:
            return float(self.G(x[0], x[0]))
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        Wm = np.asarray(self.W(X1, X2))
        Gm = np.asarray(self.G(X1, X2))
        Km = np.asarray(self.K(X1, X2))
        Wm = 0.5 * (Wm - Wm.T)
        Km = 0.5 * (Km - Km.T)
        M = np.block([[Wm, Gm], [-Gm.T, Km]])
        return float((-1) ** (k * (k - 1) // 2) * pfaffian(M))


# --- partition functions ----------------------------------------------------------

def partition_Z01(N: int, c: Coupling, kappa: complex) -> float | complex:
    """One-flavour partition function <det(kappa^2 - W W^dagger)> = q_N(kappa^2)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N == 0:
        return 1.0
    coeffs = q_poly(N, c).coeffs
    return np.polynomial.polynomial.polyval(np.asarray(kappa) ** 2, coeffs).item()


def _poly_kernel(M: int, c: Coupling, k1: float, k2: float) -> float:
    if M < 2:
        return 0.0
    ks = KernelSet(M, c, precision="double")
    return float(ks.K(k1, k2))


def partition_Z0f(N: int, c: Coupling, masses: ArrayLike) -> float:
    """<prod_f det(kappa_f^2 - W W^dagger)> for an even number of distinct masses.

    Z = (C_N / C_{N+kf}) / Delta_kf(kappa^2) * Pf[K_{N+kf}(kappa_d, kappa_c)]_{c,d}.
    """
    m = np.asarray(masses, dtype=float)
    kf = m.size
    if kf % 2:
        raise ValueError("number of masses must be even")
    y = m * m
    for i in range(kf):
        for j in range(i):
            if abs(y[i] - y[j]) < 1e-8:
                raise DegenerateMassError("masses must have distinct squares (confluent limit not supported)")
    if kf == 0:
        return 1.0
    M = N + kf
    ks = KernelSet(M, c, precision="double")
    Kmat = np.zeros((kf, kf))
    for a in range(kf):
        for b in range(kf):
            if a != b:
                Kmat[a, b] = float(ks.K(m[b], m[a]))
    Kmat = 0.5 * (Kmat - Kmat.T)
    logratio = ens.log_norm_constant(N, c) - ens.log_norm_constant(M, c)
    return float(math.exp(logratio) / ens.vandermonde(y) * pfaffian(Kmat))


def partition_Z0f_moments(N: int, c: Coupling, masses: ArrayLike, spec: QuadratureSpec = MOMENT_SPEC) -> float:
    """Independent route: ratio of de Bruijn Pfaffians of monomial skew moments.

    <prod_i P(l_i^2)> = Pf[A S A^T | A r] / Pf[S | r] with P(y) = prod_f (kappa_f^2 - y),
    S the monomial Gram matrix of G, r the moments of g (border only for odd N).
    """
    from .polynomials import monomial_gram

    if N < 1:
        raise ValueError("N must be >= 1")
    poly = np.array([1.0])
    for m in np.asarray(masses, dtype=float):
        poly = np.polynomial.polynomial.polymul(poly, [m * m, -1.0])
    amax = N - 1 + poly.size - 1
    S = monomial_gram(amax, "even", c, spec)
    r = ens.g_moments(amax, c)

    def pf(p: np.ndarray) -> float:
        A = np.zeros((N, amax + 1))
        for i in range(N):
            A[i, i : i + p.size] = p
        Sm = A @ S @ A.T
        Sm = 0.5 * (Sm - Sm.T)
        if N % 2:
            rb = (A @ r)[:, None]
            Sm = np.block([[Sm, rb], [-rb.T, np.zeros((1, 1))]])
        return pfaffian(Sm)

    return float(pf(poly) / pf(np.array([1.0])))


# --- functional surface -------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationRequest:
    points: tuple[float, ...]

    def __post_init__(self) -> None:
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts or min(pts) < 0:
            raise ValueError("points must be a nonempty list of nonnegative reals")

    @property
    def k(self) -> int:
        return len(self.points)


def kernel_K(ks: KernelSet, l1: ArrayLike, l2: ArrayLike) -> np.ndarray | float:
    return ks.K(l1, l2)


def kernel_G(ks: KernelSet, l1: ArrayLike, l2: ArrayLike) -> np.ndarray | float:
    return ks.G(l1, l2)


def kernel_W(ks: KernelSet, l1: ArrayLike, l2: ArrayLike) -> np.ndarray | float:
    return ks.W(l1, l2)


def level_density(ks: KernelSet, lam: ArrayLike) -> np.ndarray | float:
    return ks.level_density(lam)


def correlation(ks: KernelSet, req: CorrelationRequest) -> float:
    return ks.correlation(req.points)
