import math

import numpy as np
import pytest

import artifact.timescales as ts_mod
from artifact.core_model import PoschlTeller, SquareBarrier
from artifact.errors import BranchPointError, DomainError
from artifact.kernel import decompose
from artifact.resonances import real_resonance_momenta
from artifact.timescales import (SineMode, Tabulated, compute_timescales,
                                 crossing_equation_residual, crossing_times,
                                 dawn_prime_closed_form, project_initial_state,
                                 sine_overlap, twilight_asymptote,
                                 twilight_time, wkb_time)


def _square(W, v0=3.0, a=2.0):
    p0 = real_resonance_momenta(SquareBarrier(a=a, b=a + 1.0, v0=v0), 0)[0]
    return SquareBarrier(a=a, b=a + W / math.sqrt(2 * v0 - p0 * p0), v0=v0)


@pytest.fixture(scope="module")
def sq3():
    s = _square(3.0)
    return s, decompose(s)


@pytest.mark.parametrize("W", [1.0, 3.0, 8.0])
def test_crossing_round_trip(W):
    s = _square(W)
    d = decompose(s)
    cr = crossing_times(s, d)
    assert cr.t_early < cr.t_late
    for t in (cr.t_early, cr.t_late):
        assert abs(crossing_equation_residual(s, d, t)) <= 1e-10


def test_residual_sign_flips(sq3):
    s, d = sq3
    cr = crossing_times(s, d)
    r = [crossing_equation_residual(s, d, t) for t in
         (0.5 * cr.t_early, math.sqrt(cr.t_early * cr.t_late), 2 * cr.t_late)]
    assert r[0] * r[1] < 0 and r[1] * r[2] < 0


def test_branch_point_error(sq3, monkeypatch):
    s, d = sq3
    monkeypatch.setattr(ts_mod, "log_gf_ratio", lambda *a, **k: 50.0)
    with pytest.raises(BranchPointError):
        twilight_time(s, d)


def test_sine_mode_norm_in_dp(sq3):
    s, d = sq3
    w = project_initial_state(s, SineMode(1), d.poles)
    assert w.norm(40.0) == pytest.approx(1.0, abs=1e-5)
    assert all(f >= 0 for _, f in w.f_tilde)


def test_sine_overlap_removable_point():
    a, mu = 2.0, 2
    p0 = mu * math.pi / a
    near = sine_overlap(np.array([p0 * (1 - 1e-9), p0, p0 * (1 + 1e-9)]), a, mu)
    assert np.allclose(near, near[1], rtol=1e-7)
    assert abs(near[1]) == pytest.approx(math.sqrt(a / 2), rel=1e-12)


def test_tabulated_matches_sine_mode(sq3):
    s, d = sq3
    xs = np.linspace(0, 2.0, 4001)
    tab = Tabulated(xs, SineMode(1).values(xs, 2.0))
    w_tab = project_initial_state(s, tab, d.poles)
    w_sin = project_initial_state(s, SineMode(1), d.poles)
    for p in (0.3, 1.2, 2.0):
        assert w_tab.c(p) == pytest.approx(w_sin.c(p), rel=1e-6)


def test_state_validation(sq3):
    s, d = sq3
    xs = np.linspace(0, 2.0, 101)
    with pytest.raises(DomainError):
        project_initial_state(s, Tabulated(xs, 2 * SineMode(1).values(xs, 2.0)), d.poles)
    with pytest.raises(DomainError):
        project_initial_state(s, SineMode(2), d.poles)  # above the V0 = 3 top
    with pytest.raises(DomainError):
        SineMode(0)


def test_twilight_approaches_asymptote():
    ratios = []
    for W in (5.0, 10.0, 20.0):
        s = _square(W, v0=8.0)
        d = decompose(s)
        ratios.append(twilight_time(s, d) / twilight_asymptote(s, d))
    assert ratios[0] > ratios[1] > ratios[2] > 1.0


def test_dawn_dominance_and_ordering():
    s = _square(20.0, v0=8.0)
    d = decompose(s)
    w = project_initial_state(s, SineMode(2), d.poles)
    ts = compute_timescales(s, SineMode(2), d, weights=w, dawn_prime="closed")
    assert ts.ordered() and not ts.used_fallback
    t = 2 * ts.t_dawn
    ft = dict(w.f_tilde)
    lead = math.log(ft[0]) - d.poles[0].gamma_n * t
    for pl in d.poles[1:]:
        assert lead > math.log(ft[pl.index]) - pl.gamma_n * t


def test_mu1_uses_fallback(sq3):
    s, d = sq3
    ts = compute_timescales(s, SineMode(1), d)
    assert ts.used_fallback and ts.t_dawn < ts.t_twilight


def test_dawn_prime_closed_form_monotone():
    s = _square(10.0, v0=8.0)
    vals = [dawn_prime_closed_form(s, n) for n in (0, 1, 2)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_closed_dawn_prime_square_only():
    pt = PoschlTeller(b=40.0, u0=0.5, alpha=0.3)
    d = decompose(pt)
    with pytest.raises(DomainError):
        compute_timescales(pt, SineMode(1, width=10.0), d, dawn_prime="closed")
    with pytest.raises(ValueError):
        compute_timescales(pt, SineMode(1, width=10.0), d, dawn_prime="other")


def test_wkb_time():
    s = SquareBarrier(a=2.0, b=3.0, v0=8.0)
    assert wkb_time(s) == pytest.approx(4 / (2 * math.pi ** 2))
    assert wkb_time(s, 2, "validity") == pytest.approx(wkb_time(s))
    assert wkb_time(SquareBarrier(a=4.0, b=5.0, v0=8.0)) == pytest.approx(4 * wkb_time(s))
