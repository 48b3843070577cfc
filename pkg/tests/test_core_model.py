import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.core_model import (INFINITE, ModifiedSquareBarrier, PoschlTeller,
                                 SquareBarrier, UnitsContext, barrier_geometry,
                                 classify_region, evaluate_potential, parse_config,
                                 pt_turning_points, region_edge, tail_exponent)
from artifact.errors import ConfigError, DegenerateError, DomainError

SQ = SquareBarrier(a=2.0, b=3.44193, v0=3.0)
MS = ModifiedSquareBarrier(a=2.0, b=3.5, v0=3.0, v1=-1.5)
PT = PoschlTeller(b=20.0, u0=0.5, alpha=0.3)


@pytest.mark.parametrize("kw", [dict(a=0, b=1, v0=1), dict(a=2, b=2, v0=1),
                                dict(a=1, b=2, v0=-1), dict(a=math.nan, b=2, v0=1)])
def test_square_rejects_bad_geometry(kw):
    with pytest.raises(DomainError):
        SquareBarrier(**kw)


def test_modified_needs_negative_outer_floor():
    with pytest.raises(DomainError):
        ModifiedSquareBarrier(a=1, b=2, v0=3, v1=0.5)


def test_pt_rejects_nonpositive():
    with pytest.raises(DomainError):
        PoschlTeller(b=1.0, u0=0.0, alpha=1.0)


def test_tail_exponents():
    assert tail_exponent(SQ) == Fraction(3, 2)
    assert tail_exponent(MS) == 2
    assert tail_exponent(PT) == Fraction(1, 2)


def test_omega_constructors_round_trip():
    assert SquareBarrier.from_omega(10.0, 2.0, 3.0).omega == pytest.approx(10.0)
    m = ModifiedSquareBarrier.from_omega(6.0, 3.0, -1.5, 1.0)
    assert m.a == pytest.approx(2.0) and m.omega == pytest.approx(6.0)
    assert PoschlTeller.from_omega(40.0, 0.5, 0.3).b == pytest.approx(40.0)


def test_potential_values():
    x = np.array([-1.0, 0.0, 1.0, 2.5, 3.44193, 5.0])
    v = evaluate_potential(SQ, x)
    assert v[0] == INFINITE
    assert list(v[1:]) == [0.0, 0.0, 3.0, 3.0, 0.0]
    assert evaluate_potential(MS, 10.0) == -1.5
    assert evaluate_potential(PT, 20.0) == pytest.approx(0.5)


def test_regions_and_edges():
    assert [classify_region(SQ, x) for x in (1.0, 2.5, 4.0)] == ["L", "B", "R"]
    assert region_edge(SQ) == 2.0
    left, right = pt_turning_points(PT, 0.1)
    assert left < PT.b < right
    assert evaluate_potential(PT, left) == pytest.approx(0.1)
    assert region_edge(PT, 0.1) == pytest.approx(left)
    with pytest.raises(DomainError):
        classify_region(SQ, -0.1)


def test_pt_turning_point_clipped_at_wall():
    pt = PoschlTeller(b=1.0, u0=0.5, alpha=0.3)
    assert pt_turning_points(pt, 0.45)[0] == 0.0


def test_geometry_kappa_and_degenerate():
    g = barrier_geometry(SQ)
    assert g.kappa_at(1.0) == pytest.approx(math.sqrt(5.0))
    assert g.wkb_exponent_at(1.0) == pytest.approx(math.sqrt(5.0) * 1.44193)
    with pytest.raises(DegenerateError):
        g.kappa_at(3.0)
    assert barrier_geometry(PT).thickness == pytest.approx(math.pi / 0.3)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.01, 100))
@settings(max_examples=100, deadline=None)
def test_units_round_trip(hbar, mass, e):
    u = UnitsContext(hbar, mass)
    assert u.energy_out(u.energy_in(e)) == pytest.approx(e, rel=1e-14)
    assert u.time_out(u.time_in(e)) == pytest.approx(e, rel=1e-14)
    # the phase E t / hbar is unit independent
    assert u.energy_in(e) * u.time_in(1.0) == pytest.approx(e * 1.0 / hbar, rel=1e-13)
    spec = SquareBarrier(1.0, 2.0, e)
    assert u.spec_out(u.spec_in(spec)).v0 == pytest.approx(e, rel=1e-14)


def test_units_reject_bad():
    with pytest.raises(DomainError):
        UnitsContext(0.0, 1.0)


def test_parse_config_models():
    spec, cfg = parse_config("model = square\na = 2\nb = 3.44193\nv0 = 3  # comment\n")
    assert spec == SQ and cfg["model"] == "square"
    spec, _ = parse_config("model = msquare\nomega_b = 6\nv0 = 3\nv1 = -1.5\nwidth = 1.5\n")
    assert spec.a == pytest.approx(2.0) and spec.b == pytest.approx(3.5)
    spec, _ = parse_config("model = pt\nomega_c = 40\nu0 = 0.5\nalpha = 0.3\n")
    assert spec.b == pytest.approx(40.0)
    spec, _ = parse_config("model = square\na = 2\nb = 3\nv0 = 12\nhbar = 2\n")
    assert spec.v0 == pytest.approx(3.0)


@pytest.mark.parametrize("text,line", [
    ("model = square\na 2\n", 2),
    ("model = square\na = 2\na = 3\n", 3),
    ("model = square\n\na = two\n", 3),
])
def test_parse_config_line_numbers(text, line):
    with pytest.raises(ConfigError, match=f"line {line}"):
        parse_config(text)


def test_parse_config_semantic_errors():
    with pytest.raises(ConfigError, match="model"):
        parse_config("model = cube\n")
    with pytest.raises(ConfigError, match="missing"):
        parse_config("model = square\na = 2\n")
    with pytest.raises(ConfigError):
        parse_config("model = square\na = 2\nb = 1\nv0 = 3\n")


def test_parse_config_from_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("model = square\na = 2\nb = 3.44193\nv0 = 3\n")
    assert parse_config(p)[0] == SQ
    assert parse_config(str(p))[0] == SQ
