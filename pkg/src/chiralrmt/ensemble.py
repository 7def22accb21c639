"""Couplings, normalization constants, one- and two-point weights, and the jpdf.

Sign convention: G(l1, l2) carries sinh[eta_-(l2^2 - l1^2) sin 2t], i.e. it is
positive for l1 < l2.  With the Vandermonde prod_{a<b}(x_b - x_a) this makes the
jpdf a probability density.  H(l) = int_0^inf G(x, l) dx, g-bar = int_0^inf g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from numpy.typing import ArrayLike

from .linalg import pfaffian
from .quadrature import DEFAULT_SPEC, QuadratureSpec, theta_integral
from .specfun import bessel_i0_scaled

SQRT_PI = math.sqrt(math.pi)


class CouplingDomainError(ValueError):
    pass


class DegenerateEndpointError(ValueError):
    pass


@dataclass(frozen=True)
class Coupling:
    mu: float
    eta_plus: float
    eta_minus: float

    @property
    def mu2(self) -> float:
        return self.mu * self.mu

    @property
    def D(self) -> float:
        """eta_+^2 - eta_-^2 = 1/(4 mu^2)."""
        return 1.0 / (4.0 * self.mu2)


def make_coupling(mu: float) -> Coupling:
    mu = float(mu)
    if not (0.0 < mu <= 1.0) or not math.isfinite(mu):
        raise CouplingDomainError(
            f"mu={mu!r} outside (0, 1]; the model is symmetric under mu -> -mu and "
            "mu -> 1/mu (with W -> W/mu), so (0, 1] covers every coupling"
        )
    m2 = mu * mu
    em = (1.0 - m2) / (4.0 * m2)
    return Coupling(mu, em + 0.5, em)


def _require_interior(c: Coupling) -> None:
    if c.mu >= 1.0:
        raise DegenerateEndpointError(
            "mu=1 makes h_j vanish and C_N diverge; use the mu=1 limit routines "
            "(q_limit_mu1, laguerre_density)"
        )


# --- constants -------------------------------------------------------------

def log_norm_constant(N: int, c: Coupling) -> float:
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N >= 2:
        _require_interior(c)
    out = 0.0
    for k in range(N):
        out -= 0.5 * math.log(4.0 * math.pi * c.mu2) + math.lgamma(k + 1)
        if k:
            out -= k * math.log1p(-c.mu2)
    return out


def norm_constant(N: int, c: Coupling) -> float:
    return math.exp(log_norm_constant(N, c))


def h(j: int, c: Coupling) -> float:
    """h_j = C_j / C_{j+2} = 4 pi mu^2 (1 - mu^2)^(2j+1) j! (j+1)!."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    _require_interior(c)
    return math.exp(
        math.log(4.0 * math.pi * c.mu2) + (2 * j + 1) * math.log1p(-c.mu2)
        + math.lgamma(j + 1) + math.lgamma(j + 2)
    )


def gbar(c: Coupling) -> float:
    return 2.0 * SQRT_PI * c.mu


# --- one- and two-point weights --------------------------------------------

def weight_g(lam: ArrayLike, c: Coupling) -> np.ndarray | float:
    """g(l) = 2 sqrt(pi) l exp(-eta_+ l^2) I0(eta_- l^2), in scaled form."""
    lam = np.asarray(lam, dtype=float)
    out = 2.0 * SQRT_PI * lam * np.exp(-0.5 * lam * lam) * bessel_i0_scaled(c.eta_minus * lam * lam)
    return out if out.ndim else float(out)


# points per batched theta quadrature; keeps large grids under the adaptive work cap
_CHUNK = 2048


def weight_G(l1: ArrayLike, l2: ArrayLike, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray | float:
    """Two-point weight by a theta quadrature of a log-space integrand (broadcasts)."""
    l1, l2 = np.broadcast_arrays(np.asarray(l1, float), np.asarray(l2, float))
    shape = l1.shape
    a, b = l1.ravel(), l2.ravel()
    out = np.concatenate([_weight_G_flat(a[k : k + _CHUNK], b[k : k + _CHUNK], c, spec)
                          for k in range(0, max(a.size, 1), _CHUNK)])[: a.size].reshape(shape)
    return out if out.ndim else float(out)


def _weight_G_flat(l1: np.ndarray, l2: np.ndarray, c: Coupling, spec: QuadratureSpec) -> np.ndarray:
    if l1.size == 0:
        return np.zeros(0)
    x1 = l1.reshape(-1, 1)
    x2 = l2.reshape(-1, 1)
    A = c.eta_minus * (x2 * x2 - x1 * x1)
    B = 2.0 * c.eta_minus * x1 * x2
    E = c.eta_plus * (x1 * x1 + x2 * x2)

    def F(s: np.ndarray, co: np.ndarray) -> np.ndarray:
        u = A * s
        au = np.abs(u)
        bc = B * co
        return np.sign(u) * (-0.5 * np.expm1(-2.0 * au)) * bessel_i0_scaled(bc) * np.exp(au + np.abs(bc) - E)

    res = theta_integral(F, spec).require()
    return 4.0 * x1[:, 0] * x2[:, 0] * np.asarray(res).reshape(-1)


def _laguerre_stack(amax: int, y: np.ndarray) -> np.ndarray:
    """L_0..L_amax at y, stacked on a new leading axis."""
    out = np.empty((amax + 1,) + y.shape)
    out[0] = 1.0
    if amax >= 1:
        out[1] = 1.0 - y
    for k in range(1, amax):
        out[k + 1] = ((2 * k + 1 - y) * out[k] - k * out[k - 1]) / (k + 1)
    return out


def weight_moments(lam: ArrayLike, amax: int, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """M_a(l) = int_0^inf G(l, x) x^(2a) dx for a = 0..amax; shape (amax+1,) + lam.shape.

    Closed Gaussian-Laguerre integral in x leaves one theta integral:
    M_a = 2 l int tan t [F_a(p_-) - F_a(p_+)], p_-+ = eta_+ -+ eta_- sin 2t,
    F_a(p) = a!/(2 p^(a+1)) exp(-D l^2/p) L_a(-eta_-^2 l^2 cos^2 2t / p).
    """
    lam = np.asarray(lam, dtype=float)
    shape = lam.shape
    flat = lam.ravel()
    step = max(1, _CHUNK // (amax + 1))
    parts = [_moments_flat(flat[k : k + step], amax, c, spec) for k in range(0, flat.size, step)]
    res = np.concatenate(parts, axis=1) if parts else np.zeros((amax + 1, 0))
    return res.reshape((amax + 1,) + shape)


def _moments_flat(lam: np.ndarray, amax: int, c: Coupling, spec: QuadratureSpec) -> np.ndarray:
    l2 = lam.reshape(-1, 1) ** 2
    em, ep, D = c.eta_minus, c.eta_plus, c.D
    fact = np.array([math.factorial(a) for a in range(amax + 1)], dtype=float)[:, None, None]

    def Fa(p: np.ndarray, co: np.ndarray) -> np.ndarray:
        y = -(em * em) * l2 * (co * co) / p
        pw = p[None, None, :] ** -(np.arange(amax + 1)[:, None, None] + 1.0)
        return fact * 0.5 * pw * np.exp(-D * l2 / p) * _laguerre_stack(amax, y)

    def F(s: np.ndarray, co: np.ndarray) -> np.ndarray:
        return Fa(ep - em * s, co) - Fa(ep + em * s, co)

    res = np.asarray(theta_integral(F, spec).require())
    return 2.0 * lam.reshape(1, -1) * res.reshape(amax + 1, -1)


def weight_H(lam: ArrayLike, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray | float:
    """H(l) = int_0^inf G(x, l) dx by the closed single-theta form."""
    out = -weight_moments(lam, 0, c, spec)[0]
    return out if out.ndim else float(out)


def weight_Gtilde(l1: ArrayLike, l2: ArrayLike, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray | float:
    gb = gbar(c)
    out = (
        np.asarray(weight_G(l1, l2, c, spec))
        - np.asarray(weight_g(l1, c)) * np.asarray(weight_H(l2, c, spec)) / gb
        + np.asarray(weight_H(l1, c, spec)) * np.asarray(weight_g(l2, c)) / gb
    )
    return out if out.ndim else float(out)


def monomial_skew_row(amax: int, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """S_a = <1 | l^(2a)> = int int G(l1, l2) l2^(2a) for a = 0..amax (closed theta form)."""
    em, ep, D = c.eta_minus, c.eta_plus, c.D
    a = np.arange(amax + 1)[:, None]
    fact = np.array([math.factorial(k) for k in range(amax + 1)], dtype=float)[:, None]

    def F(s: np.ndarray, co: np.ndarray) -> np.ndarray:
        base = (1.0 + em * em * co * co / D)[None, :] ** a
        return fact * base / (2.0 * D) * ((ep - em * s)[None, :] ** -a - (ep + em * s)[None, :] ** -a)

    return np.asarray(theta_integral(F, spec).require())


def g_moments(amax: int, c: Coupling) -> np.ndarray:
    """r_a = int_0^inf g(l) l^(2a) dl = sqrt(pi) a! (2 mu)^(a+1) P_a((1 + mu^2)/(2 mu))."""
    from scipy.special import eval_legendre

    x = (1.0 + c.mu2) / (2.0 * c.mu)
    return np.array([
        SQRT_PI * math.factorial(a) * (2.0 * c.mu) ** (a + 1) * eval_legendre(a, x) for a in range(amax + 1)
    ])


# --- jpdf --------------------------------------------------------------------

def vandermonde(x: ArrayLike) -> float:
    x = np.asarray(x, dtype=float)
    out = 1.0
    for b in range(len(x)):
        for a in range(b):
            out *= x[b] - x[a]
    return out


def jpdf(lam: ArrayLike, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Joint density of the N singular values (unordered, w.r.t. prod d lambda)."""
    lam = np.asarray(lam, dtype=float)
    N = lam.size
    if N < 1:
        raise ValueError("jpdf needs at least one value")
    if np.any(lam < 0):
        raise ValueError("singular values are nonnegative")
    if len(np.unique(lam)) < N:
        return 0.0
    pref = math.exp(log_norm_constant(N, c) - math.lgamma(N + 1)) * vandermonde(lam * lam)
    i, j = np.triu_indices(N, 1)
    if N % 2 == 0:
        M = np.zeros((N, N))
        vals = weight_G(lam[i], lam[j], c, spec)
    else:
        M = np.zeros((N + 1, N + 1))
        vals = weight_Gtilde(lam[i], lam[j], c, spec) if N > 1 else np.zeros(0)
        gv = weight_g(lam, c)
        M[:N, N] = gv
        M[N, :N] = -gv
    M[i, j] = vals
    M[j, i] = -np.asarray(vals)
    return float(pref * pfaffian(M))


# --- extended precision moments --------------------------------------------

@lru_cache(maxsize=16)
def _mp_theta_nodes(degree: int, dps: int) -> tuple[tuple, ...]:
    """Gauss-Legendre nodes on the four quarter panels of [0, pi] at dps digits."""
    with mpmath.workdps(dps):
        gl = mpmath.calculus.quadrature.GaussLegendre(mpmath.mp)
        base = gl.calc_nodes(degree, mpmath.mp.prec)
        q = mpmath.pi / 4
        nodes = []
        for k in range(4):
            lo = k * q
            for x, w in base:
                t = lo + q * (x + 1) / 2
                nodes.append((mpmath.sin(2 * t), mpmath.cos(2 * t), mpmath.tan(t), w * q / 2))
        return tuple(nodes)


def _mp_moments_at(lam: float, amax: int, mu2, nodes) -> list:
    ep = (1 + mu2) / (4 * mu2)
    em = (1 - mu2) / (4 * mu2)
    D = 1 / (4 * mu2)
    l2 = mpmath.mpf(lam) ** 2
    acc = [mpmath.mpf(0)] * (amax + 1)
    fact = [mpmath.factorial(a) for a in range(amax + 1)]
    for s, co, tn, w in nodes:
        for sign in (1, -1):
            p = ep - sign * em * s
            y = -(em * em) * l2 * co * co / p
            e = mpmath.exp(-D * l2 / p) * tn * w * sign / 2
            L0, L1 = mpmath.mpf(1), 1 - y
            pk = 1 / p
            for a in range(amax + 1):
                La = L0 if a == 0 else L1
                acc[a] += fact[a] * pk * e * La
                pk /= p
                if a >= 1:
                    L0, L1 = L1, ((2 * a + 1 - y) * L1 - a * L0) / (a + 1)
    return [2 * lam * v for v in acc]


def weight_moments_mp(lam: ArrayLike, amax: int, mu: float, dps: int = 40, degree: int = 6) -> list[list]:
    """Extended-precision M_a(l): list over a of lists over lam (mpf values)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    with mpmath.workdps(dps):
        mu2 = mpmath.mpf(mu) ** 2
        nodes = _mp_theta_nodes(degree, dps)
        cols = [_mp_moments_at(float(x), amax, mu2, nodes) for x in lam]
        return [[col[a] for col in cols] for a in range(amax + 1)]


def monomial_skew_row_mp(amax: int, mu: float, dps: int = 40, degree: int = 6) -> list:
    with mpmath.workdps(dps):
        mu2 = mpmath.mpf(mu) ** 2
        ep = (1 + mu2) / (4 * mu2)
        em = (1 - mu2) / (4 * mu2)
        D = 1 / (4 * mu2)
        out = []
        for a in range(amax + 1):
            acc = mpmath.mpf(0)
            for s, co, tn, w in _mp_theta_nodes(degree, dps):
                acc += tn * w * (1 + em * em * co * co / D) ** a * ((ep - em * s) ** -a - (ep + em * s) ** -a)
            out.append(mpmath.factorial(a) * acc / (2 * D))
        return out


def g_moments_mp(amax: int, mu: float, dps: int = 40) -> list:
    with mpmath.workdps(dps):
        m = mpmath.mpf(mu)
        x = (1 + m * m) / (2 * m)
        return [mpmath.sqrt(mpmath.pi) * mpmath.factorial(a) * (2 * m) ** (a + 1) * mpmath.legendre(a, x)
                for a in range(amax + 1)]


def weight_g_mp(lam: float, mu: float, dps: int = 40):
    with mpmath.workdps(dps):
        m2 = mpmath.mpf(mu) ** 2
        l = mpmath.mpf(lam)
        ep = (1 + m2) / (4 * m2)
        em = (1 - m2) / (4 * m2)
        return 2 * mpmath.sqrt(mpmath.pi) * l * mpmath.exp(-ep * l * l) * mpmath.besseli(0, em * l * l)


@dataclass(frozen=True)
class WeightSet:
    """Bundle of the weights for one coupling."""

    coupling: Coupling
    spec: QuadratureSpec = field(default=DEFAULT_SPEC)

    def g(self, lam):
        return weight_g(lam, self.coupling)

    def G(self, l1, l2):
        return weight_G(l1, l2, self.coupling, self.spec)

    def H(self, lam):
        return weight_H(lam, self.coupling, self.spec)

    def Gtilde(self, l1, l2):
        return weight_Gtilde(l1, l2, self.coupling, self.spec)

    @property
    def gbar(self) -> float:
        return gbar(self.coupling)
