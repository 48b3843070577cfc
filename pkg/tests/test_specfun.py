import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lambertw as sp_lambertw

from artifact.errors import BranchCutError, DomainError, PoleError
from artifact.specfun import (LambertBranch, complex_sqrt_lower, gamma, hyp2f1,
                              lambert_w, lambert_wm1_log, log_gamma)

INV_E = math.exp(-1.0)


# ---------------------------------------------------------------------------
# Lambert W

def test_lambert_matches_scipy_both_branches():
    z = -INV_E * np.logspace(-12, -1e-5, 500)
    for k in (0, -1):
        ours = lambert_w(k, z)
        ref = sp_lambertw(z, k).real
        assert np.max(np.abs(ours - ref) / np.abs(ref)) < 1e-12


@pytest.mark.parametrize("gap", [1e-3, 1e-6, 1e-9, 1e-12, 1e-15, 2e-16])
def test_lambert_near_branch_point_vs_mpmath(gap):
    # scipy's branch -1 loses accuracy here; the float z itself is the input,
    # so the reference is W of exactly that z
    mpmath.mp.dps = 40
    z = -INV_E * (1.0 - gap)
    for k in (0, -1):
        ref = float(mpmath.lambertw(mpmath.mpf(z), k).real)
        assert abs(lambert_w(k, z) - ref) <= 1e-14
    assert lambert_w(-1, z) < -1.0 < lambert_w(0, z)


def test_lambert_principal_positive_axis():
    z = np.logspace(-10, 300, 400)
    w = lambert_w(0, z)
    assert np.allclose(w, sp_lambertw(z, 0).real, rtol=1e-13, atol=0)


def test_lambert_branch_point_and_zero():
    assert lambert_w(0, -INV_E) == -1.0
    assert lambert_w(-1, -INV_E) == -1.0
    assert lambert_w(0, 0.0) == 0.0


def test_lambert_scalar_returns_float():
    assert isinstance(lambert_w(LambertBranch.PRINCIPAL, 1.0), float)
    assert lambert_w(0, 1.0) == pytest.approx(0.5671432904097838, rel=1e-15)


@pytest.mark.parametrize("k,z", [(0, -0.5), (-1, -0.5), (-1, 0.0), (-1, 0.3), (0, float("nan"))])
def test_lambert_domain_errors(k, z):
    with pytest.raises(DomainError):
        lambert_w(k, z)


@given(st.floats(min_value=-INV_E + 1e-12, max_value=-1e-300))
@settings(max_examples=300, deadline=None)
def test_lambert_branch_ordering_and_residual(z):
    w0, wm = lambert_w(0, z), lambert_w(-1, z)
    assert wm <= -1.0 <= w0
    for w in (w0, wm):
        assert abs(w * math.exp(w) - z) <= 1e-13


@pytest.mark.parametrize("log_eps", [-1.5, -10.0, -29.0, -31.0, -200.0, -5000.0, -1e6])
def test_wm1_log_matches_mpmath(log_eps):
    mpmath.mp.dps = 40
    ref = float(mpmath.lambertw(-mpmath.exp(log_eps), -1).real)
    assert lambert_wm1_log(log_eps) == pytest.approx(ref, rel=1e-14)


def test_wm1_log_rejects_above_branch_point():
    with pytest.raises(DomainError):
        lambert_wm1_log(-0.5)


# ---------------------------------------------------------------------------
# log-gamma

@given(st.floats(-30, 30), st.floats(-30, 30))
@settings(max_examples=300, deadline=None)
def test_log_gamma_vs_mpmath(x, y):
    z = complex(x, y)
    if y == 0.0 and x <= 0 and x == round(x):
        return
    ref = complex(mpmath.loggamma(mpmath.mpc(x, y)))
    got = log_gamma(z)
    assert abs(got - ref) <= 1e-11 * max(1.0, abs(ref))


def test_log_gamma_array_and_poles():
    z = np.array([0.5, 1.0, 2.5 + 1j, -3.5 + 0.1j])
    got = log_gamma(z)
    ref = np.array([complex(mpmath.loggamma(complex(v))) for v in z])
    assert np.allclose(got, ref, rtol=1e-13, atol=1e-14)
    for bad in (0.0, -1.0, -7.0):
        with pytest.raises(PoleError):
            log_gamma(bad)


@given(st.floats(-20, 20), st.floats(0.01, 20))
@settings(max_examples=200, deadline=None)
def test_gamma_reflection_and_recursion(x, y):
    z = complex(x, y)
    refl = gamma(z) * gamma(1 - z) * cmath.sin(math.pi * z) / math.pi
    assert abs(refl - 1) <= 1e-10
    assert abs(gamma(z + 1) / (z * gamma(z)) - 1) <= 1e-10


# ---------------------------------------------------------------------------
# 2F1

_PARAMS = [(0.3 + 0.2j, -0.7 + 0.1j, 1.4), (-0.5 + 2.0j, -0.5 - 2.0j, 0.5),
           (0.0 + 1.5j, 0.5 - 1.5j, 1.5), (1.2, 0.3, 2.7)]


@pytest.mark.parametrize("a,b,c", _PARAMS)
@pytest.mark.parametrize("z", [-0.3, 0.4 + 0.2j, -0.95, -3.0, -40.0, -1e4, 2.0 + 1.0j])
def test_hyp2f1_vs_mpmath(a, b, c, z):
    ref = complex(mpmath.hyp2f1(a, b, c, z))
    got = hyp2f1(a, b, c, z)
    assert abs(got - ref) <= 1e-11 * max(1.0, abs(ref))


@pytest.mark.parametrize("a,b,c", _PARAMS)
def test_hyp2f1_dual_route_overlap(a, b, c):
    # annulus where both the direct and the 1/z route converge
    for r in (0.96, 1.02, 1.08):
        for th in np.linspace(1.9, math.pi, 7):
            z = r * cmath.exp(1j * th)
            s = hyp2f1(a, b, c, z, "series")
            t = hyp2f1(a, b, c, z, "transform")
            assert abs(s - t) <= 1e-10 * max(1.0, abs(s))


def test_hyp2f1_edge_cases():
    assert hyp2f1(1, 2, 3, 0) == 1
    with pytest.raises(DomainError):
        hyp2f1(1, 2, -2, 0.3)
    with pytest.raises(BranchCutError):
        hyp2f1(0.3, 0.7, 1.5, 2.0, "transform")
    with pytest.raises(ValueError):
        hyp2f1(0.3, 0.7, 1.5, 0.2, "bogus")


# ---------------------------------------------------------------------------
# square root

def test_complex_sqrt_lower():
    assert complex_sqrt_lower(complex(-4.0, -0.0)) == pytest.approx(-2j)
    assert complex_sqrt_lower(4.0) == pytest.approx(2.0)
    with pytest.raises(BranchCutError):
        complex_sqrt_lower(complex(-4.0, 0.0))
    z = complex(-4.0, -1e-12)
    assert complex_sqrt_lower(z) == pytest.approx(-2j, abs=1e-9)
