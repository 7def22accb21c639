"""Fast built-in invariant checks, run by ``chiralrmt selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _pfaffian_squared() -> tuple[bool, str]:
    from .linalg import pfaffian

    rng = np.random.default_rng(0)
    worst = 0.0
    for n in (2, 4, 6, 8, 10, 12):
        X = rng.standard_normal((n, n))
        A = X - X.T
        worst = max(worst, abs(pfaffian(A) ** 2 - np.linalg.det(A)) / abs(np.linalg.det(A)))
    return worst < 1e-10, f"max rel err {worst:.2e}"


def _normalization() -> tuple[bool, str]:
    from .ensemble import make_coupling
    from .kernels import KernelSet
    from .quadrature import integrate_semi_infinite

    worst = 0.0
    for N in (1, 2, 3, 4):
        for mu in (0.1, 0.5, 0.9):
            ks = KernelSet(N, make_coupling(mu))
            val = integrate_semi_infinite(ks.level_density, breakpoints=(1.0, 2.5, 4.5)).require()
            worst = max(worst, abs(val - 1.0))
    return worst < 1e-5, f"max |int rho - 1| {worst:.2e}"


def _k2_closed_form() -> tuple[bool, str]:
    from .ensemble import make_coupling
    from .kernels import KernelSet

    c = make_coupling(0.5)
    ks = KernelSet(2, c)
    a, b = 0.7, 1.9
    ref = (a * a - b * b) / (4 * math.pi * c.mu2 * (1 - c.mu2))
    err = abs(ks.K(a, b) - ref) / abs(ref)
    return err < 1e-12, f"rel err {err:.2e}"


def _polynomial_routes() -> tuple[bool, str]:
    from .ensemble import make_coupling
    from .polynomials import q, q_via_contour

    worst = 0.0
    for mu in (0.2, 0.5, 0.8):
        c = make_coupling(mu)
        for j in range(9):
            a, b = q(j, c).coeffs, q_via_contour(j, c).coeffs
            worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))
    return worst < 1e-10, f"max rel coeff err {worst:.2e}"


def _correlation_symmetry() -> tuple[bool, str]:
    from .ensemble import make_coupling
    from .kernels import KernelSet

    ks = KernelSet(3, make_coupling(0.5))
    r12, r21, rdiag = ks.correlation([0.8, 1.6]), ks.correlation([1.6, 0.8]), ks.correlation([1.1, 1.1])
    return abs(r12 - r21) < 1e-8 and abs(rdiag) < 1e-8 and r12 > 0, f"R2(0.8,1.6)={r12:.6g}"


def _group_integral() -> tuple[bool, str]:
    from .groupint import group_integral, leutwyler_smilga_check
    from .specfun import bessel_i0_scaled

    a = 0.7
    err1 = abs(group_integral([a], 0.0) - float(bessel_i0_scaled(a * a)) * math.exp(a * a))
    lim, ref = leutwyler_smilga_check(0.5, 1.0)
    err2 = abs(lim - ref) / ref
    return err1 < 1e-8 and err2 < 1e-3, f"N=1 err {err1:.1e}, large-xi rel err {err2:.1e}"


def _bessel() -> tuple[bool, str]:
    from .specfun import bessel_i0_scaled, bessel_i1_scaled

    x = 2.5
    s0 = sum((x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(60)) * math.exp(-x)
    s1 = sum((x / 2) ** (2 * k + 1) / (math.factorial(k) * math.factorial(k + 1)) for k in range(60)) * math.exp(-x)
    err = max(abs(bessel_i0_scaled(x) - s0) / s0, abs(bessel_i1_scaled(x) - s1) / s1)
    return err < 1e-13, f"rel err {err:.1e}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "bessel_series": _bessel,
    "pfaffian_squared_equals_det": _pfaffian_squared,
    "density_normalization": _normalization,
    "kernel_k2_closed_form": _k2_closed_form,
    "polynomial_two_routes": _polynomial_routes,
    "pair_correlation_symmetry": _correlation_symmetry,
    "group_integral_limits": _group_integral,
}


def run_checks() -> list[Check]:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as e:  # a crash is a failed check, not a crashed selftest
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(Check(name, bool(ok), detail))
    return out
