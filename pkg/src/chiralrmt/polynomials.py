"""Skew-orthogonal polynomials q_j, q~_j, their mu -> 0 / mu -> 1 limits and skew products.

Polynomials are stored as ascending coefficients in x^2.  Coefficient
builders are written with plain arithmetic so that the same code runs on
floats or on mpmath numbers (used by the extended-precision kernel path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.polynomial import polynomial as P

from .ensemble import Coupling, gbar, weight_G, weight_Gtilde, weight_g, weight_moments, monomial_skew_row, g_moments
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_2d, integrate_semi_infinite
from .specfun import hermite_monic_coeffs, laguerre_coeffs

MAX_DEGREE = 16


@dataclass(frozen=True)
class PolynomialCoeffs:
    """Monic polynomial in x^2 with ascending coefficients."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at x (the polynomial variable is x^2)."""
        y = np.asarray(x, dtype=float) ** 2
        out = P.polyval(y, self.coeffs)
        return out if np.ndim(out) else float(out)

    def __add__(self, other: "PolynomialCoeffs") -> "PolynomialCoeffs":
        return PolynomialCoeffs(P.polyadd(self.coeffs, other.coeffs))

    def scaled(self, s: float) -> "PolynomialCoeffs":
        return PolynomialCoeffs(self.coeffs * s)


def _check_degree(j: int) -> None:
    if j < 0:
        raise ValueError("degree index must be nonnegative")
    if j > MAX_DEGREE:
        raise ValueError(f"degree index {j} exceeds the supported maximum {MAX_DEGREE}")


def _laguerre_terms(n: int, scale) -> list:
    # L_n(x^2 / scale) as ascending coefficients in x^2
    return [math.comb(n, k) * (-1) ** k / (math.factorial(k) * scale**k) for k in range(n + 1)]


def q_coeffs_generic(j: int, mu2) -> list:
    """Laguerre-sum coefficients of q_j, sign-normalized to monic."""
    a = 1 + mu2  # alpha / (alpha^2 - beta^2)
    bh = (1 - mu2) / (2 * (1 + mu2))  # beta / (2 alpha)
    out = [0 * mu2] * (j + 1)
    for l in range(j // 2 + 1):
        w = math.comb(2 * l, l) * bh ** (2 * l)
        for k, t in enumerate(_laguerre_terms(j - 2 * l, a)):
            out[k] += w * t
    pref = (-1) ** j * math.factorial(j) * a**j
    return [pref * v for v in out]


def q_tilde_coeffs_generic(j: int, mu2, c_tilde=0) -> list:
    """Coefficients of q~_j (free constant c~_j adds c~_j * q_j)."""
    a = 1 + mu2
    bh = (1 - mu2) / (2 * (1 + mu2))
    rho2 = ((1 - mu2) / (1 + mu2)) ** 2  # (beta / alpha)^2
    out = [0 * mu2] * (j + 2)
    for l in range(j // 2 + 1):
        n = j - 2 * l
        w = math.comb(2 * l, l) * bh ** (2 * l)
        if n >= 1:
            for k, t in enumerate(_laguerre_terms(n - 1, a)):
                out[k] += w * rho2 * n * t
        for k, t in enumerate(_laguerre_terms(n + 1, a)):
            out[k] -= w * (n + 1) * t
    pref = (-1) ** j * math.factorial(j) * a ** (j + 1)
    out = [pref * v for v in out]
    if c_tilde:
        for k, v in enumerate(q_coeffs_generic(j, mu2)):
            out[k] += c_tilde * v
    return out


def _monic(coeffs) -> PolynomialCoeffs:
    c = np.array([float(v) for v in coeffs])
    if abs(c[-1] - 1.0) > 1e-10:
        raise ArithmeticError(f"polynomial is not monic (leading coefficient {c[-1]!r})")
    c[-1] = 1.0
    return PolynomialCoeffs(c)


def q(j: int, c: Coupling) -> PolynomialCoeffs:
    _check_degree(j)
    return _monic(q_coeffs_generic(j, c.mu2))


def q_tilde(j: int, c: Coupling, c_tilde: float = 0.0) -> PolynomialCoeffs:
    _check_degree(j)
    return _monic(q_tilde_coeffs_generic(j, c.mu2, c_tilde))


def q_at_mu(j: int, mu: float) -> PolynomialCoeffs:
    """Laguerre-sum q_j at any mu in [0, 1], including the mu = 0 formula extension."""
    _check_degree(j)
    return _monic(q_coeffs_generic(j, float(mu) ** 2))


def q_via_contour(j: int, c: Coupling) -> PolynomialCoeffs:
    """q_j from the Taylor coefficient j! [z^j] (1 - a z)^(j+1) (1 - 2 a z + b z^2)^(-1/2) e^(x^2 z)."""
    _check_degree(j)
    a = 1.0 + c.mu2
    b = 4.0 * c.mu2
    # (1 - 2 a z + b z^2)^(-1/2): scaled Legendre recurrence
    leg = [1.0, a]
    for n in range(2, j + 1):
        leg.append(((2 * n - 1) * a * leg[n - 1] - (n - 1) * b * leg[n - 2]) / n)
    binom = [math.comb(j + 1, k) * (-a) ** k for k in range(j + 1)]
    phi = [sum(binom[k] * leg[n - k] for k in range(n + 1)) for n in range(j + 1)]
    coeffs = [math.factorial(j) / math.factorial(k) * phi[j - k] for k in range(j + 1)]
    return _monic(coeffs)


def q_limit_mu1(j: int) -> PolynomialCoeffs:
    """(-2)^j j! L_j(x^2 / 2)."""
    _check_degree(j)
    lc = laguerre_coeffs(j, 0.0)
    return _monic([(-2.0) ** j * math.factorial(j) * lc[k] / 2.0**k for k in range(j + 1)])


def q_limit_mu0(j: int) -> PolynomialCoeffs:
    """Monic Hermite-product form (-1)^j [He_{j+1}(x) He_j(-x) - He_{j+1}(-x) He_j(x)] / (2x)."""
    _check_degree(j)
    h1 = hermite_monic_coeffs(j + 1)
    h0 = hermite_monic_coeffs(j)
    flip = lambda c: c * (-1.0) ** np.arange(len(c))
    odd = P.polysub(P.polymul(h1, flip(h0)), P.polymul(flip(h1), h0))
    odd = np.pad(odd, (0, max(0, 2 * j + 3 - len(odd))))
    # divide by 2x: coefficient of x^(2k+1) -> x^(2k)
    even = odd[1 : 2 * j + 2 : 2] / 2.0
    return _monic((-1) ** j * even)


def q_limit_mu0_laguerre(j: int) -> PolynomialCoeffs:
    """(-2)^j ceil(j/2)! floor(j/2)! L^(-1/2)_ceil(x^2/2) L^(1/2)_floor(x^2/2)."""
    _check_degree(j)
    up, lo = (j + 1) // 2, j // 2
    prod = P.polymul(laguerre_coeffs(up, -0.5), laguerre_coeffs(lo, 0.5))
    pref = (-2.0) ** j * math.factorial(up) * math.factorial(lo)
    return _monic([pref * prod[k] / 2.0**k for k in range(j + 1)])


# --- skew products -----------------------------------------------------------

@dataclass(frozen=True)
class SkewProductSpec:
    parity: Literal["even", "odd"]
    coupling: Coupling
    spec: QuadratureSpec = DEFAULT_SPEC
    method: Literal["direct", "moments"] = "direct"


def skew_product(f1: PolynomialCoeffs, f2: PolynomialCoeffs, sp: SkewProductSpec) -> float:
    """<f1|f2> = int int w(l1, l2) f1(l1^2) f2(l2^2), w = G (even) or G~ (odd).

    method="direct" integrates the two-point weight on a 2-D grid;
    method="moments" uses the closed monomial Gram rows (one theta integral per entry).
    """
    c = sp.coupling
    if sp.method == "moments":
        return float(f1.coeffs @ monomial_gram(max(f1.degree, f2.degree), sp.parity, c, sp.spec)[: f1.degree + 1, : f2.degree + 1] @ f2.coeffs)
    weight = weight_G if sp.parity == "even" else weight_Gtilde
    scale = 1.0
    res = integrate_2d(
        lambda x, y: weight(x, y, c, sp.spec) * f1(x) * f2(y),
        (0.0, np.inf), (0.0, np.inf), sp.spec, scale=scale,
        x_breaks=(1.0, 2.5, 4.5), y_breaks=(1.0, 2.5, 4.5),
    )
    return float(res.require())


def monomial_gram(amax: int, parity: str, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """S[a, b] = <l^(2a) | l^(2b)> for a, b <= amax by 1-D quadrature of the closed moments."""
    kmax = amax

    def row(lam: np.ndarray) -> np.ndarray:
        M = weight_moments(lam, kmax, c, spec)  # (b, m)
        if parity == "odd":
            M = _odd_moments(M, lam, c, spec, kmax)
        powers = lam[None, :] ** (2 * np.arange(kmax + 1))[:, None]  # (a, m)
        return powers[:, None, :] * M[None, :, :]

    res = integrate_semi_infinite(row, spec, breakpoints=(1.0, 2.5, 4.5))
    return np.asarray(res.require())


def _odd_moments(M: np.ndarray, lam: np.ndarray, c: Coupling, spec: QuadratureSpec, kmax: int) -> np.ndarray:
    """int G~(l, x) x^(2b) dx from the even moments."""
    gb = gbar(c)
    S0 = monomial_skew_row(kmax, c, spec)
    r = g_moments(kmax, c)
    H = -M[0]
    g = weight_g(lam, c)
    return M - np.outer(S0, g) / gb + np.outer(r, H) / gb


def g_integral(f: PolynomialCoeffs, c: Coupling, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """int_0^inf g(l) f(l^2) dl by quadrature."""
    res = integrate_semi_infinite(lambda x: weight_g(x, c) * f(x), spec, breakpoints=(1.0, 2.5, 4.5))
    return float(res.require())
