import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint
from scipy import special

from chiralrmt.ensemble import jpdf, make_coupling, norm_constant
from chiralrmt.groupint import (
    GroupDomainError, GroupIntegralInput, group_integral, leutwyler_smilga_check, leutwyler_smilga_reference,
    log_prefactor, mc_group_integral, weight_B, weight_B_scaled, weight_C, weight_C_scaled,
)
from chiralrmt.linalg import ContractError, RngStream, sample_haar_unitary


# --- input -----------------------------------------------------------------------

def test_input_validation():
    assert GroupIntegralInput((0.3, 0.1)).N == 2
    with pytest.raises(GroupDomainError):
        GroupIntegralInput((0.3, 0.3 + 1e-7))
    with pytest.raises(GroupDomainError):
        GroupIntegralInput((-0.1, 0.5))
    with pytest.raises(GroupDomainError):
        GroupIntegralInput(())
    with pytest.raises(GroupDomainError):
        GroupIntegralInput((0.1,), xi=float("nan"))


# --- weights -----------------------------------------------------------------------

def test_B_antisymmetric_and_vanishing_diagonal():
    assert weight_B(0.0, 0.7, 0.7) == 0.0
    assert weight_B(0.5, 0.7, 0.7) == 0.0
    assert weight_B(0.0, 0.3, 0.9) == pytest.approx(-weight_B(0.0, 0.9, 0.3), rel=1e-13)
    assert weight_B(0.5, 0.3, 0.9) == pytest.approx(-weight_B(0.5, 0.9, 0.3), rel=1e-10)
    assert weight_B(0.0, 0.3, 0.9) > 0
    with pytest.raises(GroupDomainError):
        weight_B(0.0, -0.1, 0.2)


@pytest.mark.parametrize("ak,al", [(0.5, 1.0), (0.1, 0.6), (1.2, 0.4)])
def test_B0_theta_form_matches_plane_form(ak, al):
    t = weight_B_scaled(0.0, ak, al, method="theta")
    p = weight_B_scaled(0.0, ak, al, method="plane")
    assert p == pytest.approx(t, rel=1e-5)


def test_B0_literal_theta_oracle():
    ak, al = 0.5, 1.0
    f = lambda t: np.tan(t) * np.sinh((al**2 - ak**2) * np.sin(2 * t)) * special.i0(2 * ak * al * np.cos(2 * t))
    val = sum(sint.quad(f, a, b, epsabs=1e-14, limit=400)[0] for a, b in [(0, math.pi / 2), (math.pi / 2, math.pi)])
    assert weight_B(0.0, ak, al) == pytest.approx(4 * math.exp(ak**2 + al**2) * val, rel=1e-10)


def test_B0_small_argument_linearization():
    # sinh(x) ~ x, I0 ~ 1, int_0^pi tan(t) sin(2t) dt = pi
    assert weight_B(0.0, 0.01, 0.02) == pytest.approx(4 * math.pi * (0.02**2 - 0.01**2), rel=1e-3)


def test_B_plane_form_requires_theta_only_at_zero():
    with pytest.raises(ValueError):
        weight_B_scaled(0.5, 0.2, 0.4, method="theta")


def test_C_examples():
    assert weight_C(0.0, 0.0) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-15)
    assert weight_C_scaled(0.0, 1.0) == pytest.approx(2 * math.sqrt(math.pi) * special.i0(1.0), rel=1e-14)
    assert weight_C(2.0, 0.0) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-10)
    # xi = 0 closed form against the quadrature route at a tiny xi
    assert weight_C(1e-9, 0.8) == pytest.approx(weight_C(0.0, 0.8), rel=1e-8)
    with pytest.raises(GroupDomainError):
        weight_C(0.0, -1.0)


def test_C_quadrature_oracle():
    xi, a = 0.7, 0.6
    val = sint.quad(lambda x: math.exp(-(x - xi) ** 2 / 2) * special.i0(2 * a * x), -40, 40, epsabs=1e-13,
                   points=[0.0, xi], limit=200)[0]
    assert weight_C(xi, a) == pytest.approx(math.sqrt(2) * val, rel=1e-10)


# --- assembled integral -------------------------------------------------------------

def test_n1_closed_form():
    assert group_integral([0.0]) == pytest.approx(1.0, rel=1e-14)
    assert group_integral([0.7]) == pytest.approx(special.i0(0.49), rel=1e-8)
    assert log_prefactor(1) == pytest.approx(-0.5 * math.log(4 * math.pi))


def test_n1_with_xi_matches_angular_quadrature():
    # N = 1: I = (1 / 2 pi) int exp[2 xi a cos t + a^2 cos 2t] dt
    a, xi = 0.6, 0.8
    ref = sint.quad(lambda t: math.exp(2 * xi * a * math.cos(t) + a * a * math.cos(2 * t)), 0, 2 * math.pi)[0]
    assert group_integral([a], xi) == pytest.approx(ref / (2 * math.pi), rel=1e-9)


def test_xi_given_twice():
    with pytest.raises(ValueError):
        group_integral(GroupIntegralInput((0.2, 0.5), 0.1), xi=0.3)


@given(st.permutations([0.2, 0.6, 1.1]))
def test_permutation_symmetry(perm):
    assert group_integral(perm) == pytest.approx(group_integral([0.2, 0.6, 1.1]), rel=1e-10)


def test_positive_at_xi0():
    for a in ([0.1, 0.2], [0.3, 0.9, 1.4], [0.2, 0.5, 0.8, 1.2], [0.1, 0.4, 0.7, 1.0, 1.3]):
        assert group_integral(a) > 0


def test_jpdf_reassembled_from_group_integral():
    c = make_coupling(0.6)
    em, ep = c.eta_minus, c.eta_plus
    for lam in ([0.7, 1.6], [0.3, 1.1]):
        l = np.array(lam)
        I = group_integral(np.sqrt(em) * l)
        alt = (norm_constant(2, c) / 2 * (l[1] ** 2 - l[0] ** 2) ** 2 * l[0] * l[1] * em
               * math.exp(-ep * (l**2).sum()) * I * 4 * math.pi)
        assert alt == pytest.approx(jpdf(l, c), rel=1e-6)


# --- Monte Carlo oracle -------------------------------------------------------------

def test_mc_trivial_and_contracts():
    Z = np.zeros((2, 2))
    m, se = mc_group_integral(Z, Z, 0.3, 100, RngStream(0, 0))
    assert (m, se) == (1.0, 0.0)
    with pytest.raises(ContractError):
        mc_group_integral(np.zeros((2, 3)), np.zeros((2, 3)), 0.0, 100, RngStream(0, 0))
    with pytest.raises(ContractError):
        mc_group_integral(Z, Z, 0.0, 1, RngStream(0, 0))


@pytest.mark.parametrize("a,xi", [((0.7,), 0.0), ((0.4, 1.1), 0.0), ((0.4, 1.1), 0.5), ((0.3, 0.8, 1.2), 0.0),
                                  ((0.3, 0.8, 1.2), 0.5), ((0.2, 0.9), 0.3)])
def test_analytic_matches_haar_mc(a, xi):
    A = np.diag(a).astype(complex)
    m, se = mc_group_integral(A, A, xi, 300_000, RngStream(31, len(a)))
    assert abs(group_integral(a, xi) - m) <= 3 * se


def test_mc_invariance_under_fixed_rotation():
    a = (0.4, 1.1)
    A = np.diag(a).astype(complex)
    U0 = sample_haar_unitary(2, np.random.default_rng(4))
    m1, s1 = mc_group_integral(A, A, 0.3, 200_000, RngStream(1, 0))
    m2, s2 = mc_group_integral(A @ U0, U0.conj().T @ A, 0.3, 200_000, RngStream(1, 1))
    assert abs(m1 - m2) <= 3 * math.hypot(s1, s2)


# --- large-xi limit ---------------------------------------------------------------

def test_ls_reference_examples():
    assert leutwyler_smilga_reference(0.0, 1.0) == pytest.approx(special.i1(2.0), rel=1e-14)
    assert leutwyler_smilga_reference(0.0, 1.0) == pytest.approx(1.59064, abs=1e-5)
    m = 0.8
    conf = special.i0(2 * m) ** 2 - special.i1(2 * m) ** 2
    assert leutwyler_smilga_reference(m, m) == pytest.approx(conf, rel=1e-14)
    # continuous approach to the confluent form, first order in the gap
    d1 = leutwyler_smilga_reference(m, m + 1e-3) - conf
    d2 = leutwyler_smilga_reference(m, m + 2e-3) - conf
    assert d2 / d1 == pytest.approx(2.0, rel=1e-2)
    with pytest.raises(GroupDomainError):
        leutwyler_smilga_reference(-1.0, 1.0)


@pytest.mark.parametrize("m1,m2", [(0.5, 1.0), (0.3, 1.5)])
def test_leutwyler_smilga_limit(m1, m2):
    lim, ref = leutwyler_smilga_check(m1, m2)
    assert lim == pytest.approx(ref, rel=1e-3)


def test_ls_check_rejects_equal_masses():
    with pytest.raises(GroupDomainError):
        leutwyler_smilga_check(0.5, 0.5)
