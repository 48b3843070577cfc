import cmath
import math

import numpy as np
import pytest

from artifact.core_model import ModifiedSquareBarrier, PoschlTeller, SquareBarrier
from artifact.errors import EarlyTimeError
from artifact.kernel import (NORMALIZATION_FACTOR, branch_integral, decompose,
                             free_kernel, kernel_direct_quadrature,
                             kernel_late_time, pole_coefficient,
                             residue_contour, validity_check)

SQ = SquareBarrier(a=2.0, b=3.44193, v0=3.0)
MS = ModifiedSquareBarrier(a=2.0, b=3.5, v0=3.0, v1=-1.5)


@pytest.fixture(scope="module")
def dsq():
    return decompose(SQ)


@pytest.mark.parametrize("t", [20.0, 40.0, 80.0])
def test_late_time_matches_direct_square(dsq, t):
    k = kernel_direct_quadrature(SQ, t, 1.0, 1.3)
    assert abs(kernel_late_time(dsq, t, 1.0, 1.3) - k) <= 1e-5 * abs(k)


@pytest.mark.parametrize("t", [40.0, 80.0])
def test_late_time_matches_direct_modified(t):
    d = decompose(MS)
    k = kernel_direct_quadrature(MS, t, 1.0, 1.3)
    assert abs(kernel_late_time(d, t, 1.0, 1.3) - k) <= 1e-5 * abs(k)


def test_residue_contour_matches_pole_coefficient(dsq):
    for pl in dsq.poles:
        t = 5.0
        ref = pole_coefficient(SQ, pl, 1.0, 1.3) * cmath.exp(-1j * pl.E_complex * t)
        assert residue_contour(SQ, pl, t, 1.0, 1.3) == pytest.approx(ref, rel=1e-9)


def test_free_kernel_physical_normalization():
    t, x, y = 0.7, 1.1, 0.4
    ref = (cmath.exp(1j * (x - y) ** 2 / (2 * t)) - cmath.exp(1j * (x + y) ** 2 / (2 * t))) \
        / cmath.sqrt(2j * math.pi * t)
    assert free_kernel(t, x, y, "physical") == pytest.approx(ref, rel=1e-14)
    assert NORMALIZATION_FACTOR["physical"] / NORMALIZATION_FACTOR["paper"] == pytest.approx(8 * math.pi)
    with pytest.raises(ValueError):
        free_kernel(t, x, y, "bogus")


def test_branch_integral_power_law():
    ts = np.geomspace(1e3, 1e4, 6)
    g = [abs(branch_integral(SQ, t, 1.0, 1.3)) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(g), 1)[0]
    assert slope == pytest.approx(-1.5, abs=1e-3)


def test_branch_coefficient_matches_ray(dsq):
    t = 1e5
    g = branch_integral(SQ, t, 1.0, 1.3)
    asym = dsq.G(1.0, 1.3) * (dsq.E0 * t) ** -1.5
    assert g == pytest.approx(asym, rel=1e-3)


def test_pt_not_covered_by_quadrature():
    pt = PoschlTeller(b=20.0, u0=0.5, alpha=0.3)
    with pytest.raises(NotImplementedError):
        kernel_direct_quadrature(pt, 10.0, 1.0, 1.3)
    with pytest.raises(NotImplementedError):
        branch_integral(pt, 10.0, 1.0, 1.3)


def test_early_time_guard(dsq):
    with pytest.raises(EarlyTimeError):
        kernel_late_time(dsq, 0.0, 1.0, 1.3)
    narrow = lambda x: np.exp(-((x - 0.5) / 0.01) ** 2)
    assert not validity_check(narrow, 1e-6)
    with pytest.raises(EarlyTimeError):
        kernel_late_time(dsq, 1e-6, 1.0, 1.3, psi0=narrow)


def test_truncation_bound_decreases(dsq):
    if len(dsq.poles) > 1:
        assert dsq.truncation_bound(100.0) > dsq.truncation_bound(200.0)
