import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint
from scipy import special

from chiralrmt.ensemble import make_coupling, weight_g, weight_G
from chiralrmt.quadrature import (
    QuadratureError, QuadratureResult, QuadratureSpec, SingularityError, integrate_2d, integrate_finite,
    integrate_semi_infinite, semi_infinite_cutoff, theta_integral,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=-1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=0)


def test_require_raises_on_nonconvergence():
    with pytest.raises(QuadratureError):
        QuadratureResult(1.0, 1.0, False).require()


def test_finite_examples():
    r = integrate_finite(lambda x: x * x, 0.0, 1.0)
    assert r.converged and r.value == pytest.approx(1 / 3, abs=1e-14)
    assert integrate_finite(np.sin, 0.0, math.pi).value == pytest.approx(2.0, abs=1e-13)


def test_finite_vectorized_integrand():
    r = integrate_finite(lambda x: np.stack([x, x**2, np.exp(x)]), 0.0, 1.0)
    np.testing.assert_allclose(r.value, [0.5, 1 / 3, math.e - 1], rtol=1e-13)


def test_nonconvergence_is_flagged_not_raised():
    r = integrate_finite(lambda x: 1.0 / np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, QuadratureSpec(1e-14, 1e-14, 3))
    assert not r.converged
    assert r.error_estimate > 0


def test_semi_infinite_examples():
    assert integrate_semi_infinite(lambda x: np.exp(-x * x / 2)).value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    assert integrate_semi_infinite(lambda x: x * np.exp(-x * x / 2)).value == pytest.approx(1.0, rel=1e-12)
    assert semi_infinite_cutoff() == pytest.approx(math.sqrt(2 * math.log(1e18)))
    assert 9.0 < semi_infinite_cutoff() < 9.2


def test_semi_infinite_weight_g_integral():
    # int g = 2 sqrt(pi) mu, i.e. sqrt(pi) at mu = 0.5
    c = make_coupling(0.5)
    r = integrate_semi_infinite(lambda x: weight_g(x, c), breakpoints=(1.0, 2.5, 4.5))
    assert r.value == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_2d_examples():
    r = integrate_2d(lambda x, y: x * y, (0.0, 1.0), (0.0, 1.0))
    assert r.value == pytest.approx(0.25, abs=1e-14)
    r = integrate_2d(lambda x, y: np.exp(-(x * x + y * y) / 2) * (x - y), (0.0, np.inf), (0.0, np.inf))
    assert abs(r.value) <= r.error_estimate + 1e-15


@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0))
def test_2d_antisymmetric_integrand_vanishes_within_estimate(a, b):
    f = lambda x, y: (x - y) * np.exp(-a * (x * x + y * y)) * np.cos(b * x * y)
    r = integrate_2d(f, (-2.0, 2.0), (-2.0, 2.0))
    assert abs(r.value) <= r.error_estimate + 1e-15


def test_2d_skew_moment_matches_dense_trapezoid():
    # <1 | l^2> with the two-point weight G at mu = 0.5
    c = make_coupling(0.5)
    r = integrate_2d(lambda x, y: weight_G(x, y, c) * y * y, (0.0, np.inf), (0.0, np.inf),
                     x_breaks=(1.0, 2.5, 4.5), y_breaks=(1.0, 2.5, 4.5))

    def trap(n):
        x = np.linspace(0.0, 9.0, n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return sint.trapezoid(sint.trapezoid(weight_G(X, Y, c) * Y * Y, x, axis=1), x)

    dense = (4 * trap(721) - trap(361)) / 3  # one Romberg step on the O(h^2) trapezoid error
    assert r.value == pytest.approx(dense, rel=1e-6)
    assert r.value == pytest.approx(3 * math.pi / 4, rel=1e-8)


def test_theta_examples():
    assert theta_integral(lambda s, c: s).value == pytest.approx(math.pi, rel=1e-13)
    assert theta_integral(lambda s, c: 0.0 * s).value == 0.0


def test_theta_two_panel_orders():
    F = lambda s, c: np.sinh(0.8 * s)
    forward = theta_integral(F).value
    # the integrand is symmetric about pi/2 after t -> pi - t: integrate from the other side
    mirrored = theta_integral(lambda s, c: np.sinh(-0.8 * s)).value
    assert forward == pytest.approx(-mirrored, rel=1e-14)
    tan_sinh = lambda t: np.tan(t) * np.sinh(0.8 * np.sin(2 * t))
    ref = sum(sint.quad(tan_sinh, lo, hi, epsabs=1e-14, epsrel=1e-14, limit=200)[0]
              for lo, hi in [(0.0, math.pi / 2), (math.pi / 2, math.pi)])
    assert forward == pytest.approx(ref, rel=1e-9)


def test_theta_against_excised_extrapolation():
    c, d = 0.3, 0.2
    F = lambda s, co: np.sinh(c * s) * special.i0(d * co)
    f = lambda t: np.tan(t) * np.sinh(c * np.sin(2 * t)) * special.i0(d * np.cos(2 * t))

    def excised(delta):
        h = math.pi / 2
        return sum(sint.quad(f, lo, hi, epsabs=1e-15, epsrel=1e-14, limit=400)[0]
                   for lo, hi in [(0.0, h - delta), (h + delta, math.pi)])

    # I(delta) = I - 2 delta phi0 + O(delta^3)
    d1, d2 = 1e-3, 5e-4
    extrap = 2 * excised(d2) - excised(d1)
    assert theta_integral(F).value == pytest.approx(extrap, rel=1e-8)


def test_theta_linearity_sign_is_exact():
    F = lambda s, co: np.sinh(0.7 * s) * np.exp(0.3 * co)
    assert theta_integral(F).value == -theta_integral(lambda s, co: -F(s, co)).value


def test_theta_singularity_detected():
    with pytest.raises(SingularityError):
        theta_integral(lambda s, c: 1.0 + 0.0 * s)


EXAMPLES = [
    (lambda x: x * x, 0.0, 1.0),
    (np.sin, 0.0, math.pi),
    (lambda x: np.exp(-x) * np.cos(5 * x), 0.0, 4.0),
    (lambda x: 1.0 / (1.0 + 25 * x * x), -1.0, 1.0),
]


@pytest.mark.parametrize("f,a,b", EXAMPLES)
def test_halving_tolerance_never_increases_error_estimate(f, a, b):
    estimates = []
    tol = 1e-3
    while tol > 1e-13:
        estimates.append(integrate_finite(f, a, b, QuadratureSpec(tol, tol, 60)).error_estimate)
        tol /= 2
    assert all(e2 <= e1 for e1, e2 in zip(estimates, estimates[1:]))
