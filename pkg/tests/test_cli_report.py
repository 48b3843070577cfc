import json
import math

import numpy as np
import pytest

import artifact.cli_report as cr
from artifact.cli_report import (PRESETS, SweepRow, SweepSpec, compare_rates,
                                 fit_slope, main, read_sweep_csv, run_checks,
                                 run_pipeline, sweep_geometry, sweep_twilight,
                                 write_sweep_csv)
from artifact.errors import ConfigError, WindowError

CONFIG = "model = square\na = 2\nb = 3.44193\nv0 = 3\nmu = 1\n"


def test_fit_slope_exact_line():
    v = np.linspace(10, 30, 21)
    fit = fit_slope([SweepRow(x, 6.0 * x + 2.0) for x in v])
    assert fit.slope == pytest.approx(6.0, abs=1e-12)
    assert fit.stderr < 1e-12 and fit.n_points == 21
    with pytest.raises(WindowError):
        fit_slope([SweepRow(x, x) for x in v[:9]])


def test_fit_slope_skips_failed_rows():
    v = np.linspace(10, 30, 21)
    rows = [SweepRow(x, 2.0 * x) for x in v] + [SweepRow(20.5, math.nan, "error: x")]
    assert fit_slope(rows).slope == pytest.approx(2.0)


@pytest.mark.parametrize("kw", [dict(model="cube", omega=6), dict(model="square", omega=-1),
                                dict(model="square", omega=6, v_min=1.0),
                                dict(model="square", omega=6, n_samples=5),
                                dict(model="square", omega=6, v_min=30, v_max=10)])
def test_sweep_spec_invariants(kw):
    with pytest.raises(ConfigError):
        SweepSpec(**kw)


@pytest.mark.parametrize("model,omega", [("square", 6.0), ("msquare", 6.0), ("pt", 40.0)])
def test_sweep_geometry_hits_v(model, omega):
    from artifact.resonances import real_resonance_momenta
    s = sweep_geometry(model, omega, 15.0)
    k = real_resonance_momenta(s, 0)[0]
    if model == "pt":
        assert math.pi * math.sqrt(2 * s.u0 - k * k) / s.alpha == pytest.approx(15.0, rel=1e-12)
    else:
        assert math.sqrt(2 * s.v0 - k * k) * (s.b - s.a) == pytest.approx(15.0, rel=1e-12)
    assert s.omega == pytest.approx(omega, rel=1e-12)


def test_sweep_deterministic_and_monotone(tmp_path):
    sw = SweepSpec("square", 6.0, 10.0, 30.0, 20)
    rows = sweep_twilight(sw)
    vals = [r.value for r in rows]
    assert all(r.ok for r in rows) and np.all(np.diff(vals) > 0)
    p1 = write_sweep_csv(rows, tmp_path / "a.csv")
    p2 = write_sweep_csv(sweep_twilight(sw, threads=2), tmp_path / "b.csv")
    assert open(p1, "rb").read() == open(p2, "rb").read()
    back = read_sweep_csv(p1)
    assert [r.value for r in back] == vals


def test_failed_point_recorded(monkeypatch):
    real = cr.sweep_geometry

    def flaky(model, omega, v):
        if v > 29:
            raise ValueError("synthetic failure")
        return real(model, omega, v)
    monkeypatch.setattr(cr, "sweep_geometry", flaky)
    rows = sweep_twilight(SweepSpec("square", 6.0, 10.0, 30.0, 21))
    assert rows[-1].status.startswith("error: ValueError") and math.isnan(rows[-1].value)
    assert all(r.ok for r in rows[:-1])


def test_run_checks_all_pass():
    res = run_checks()
    assert res and all(ok for _, ok, _ in res)


def test_cli_check(capsys):
    assert main(["check"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_pipeline_summary(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONFIG + "stages = resonances, kernel, timescales, report\n")
    assert run_pipeline(cfg, tmp_path / "out") == 0
    summ = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summ["t_dawn"] < summ["t_twilight"]
    assert summ["tail_exponent"] == 1.5
    assert (tmp_path / "out" / "poles.csv").exists()
    assert (tmp_path / "out" / "rates.csv").exists()


def test_pipeline_tdse_stage(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("model = square\na = 2\nb = 2.8\nv0 = 3\nstages = resonances, tdse\n"
                   "t_end = 60\ndx = 0.05\ndt = 0.1\n")
    assert run_pipeline(cfg, tmp_path) == 0
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert summ["fitted_gamma"] == pytest.approx(summ["Gamma0"], rel=0.1)
    assert summ["norm_drift"] < 1e-8


def test_pipeline_error_reports(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONFIG + "stages = resonances\nn_poles = 40\n")
    assert run_pipeline(cfg, tmp_path) == 1
    assert "NoRootError" in json.loads((tmp_path / "summary.json").read_text())["error"]


def test_bad_config_line_number(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("model = square\na = 2\nb 3\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err
    cfg.write_text(CONFIG + "mu = x\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_out_env(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONFIG)
    monkeypatch.setenv("ARTIFACT_OUT", str(tmp_path / "env_out"))
    assert main(["resonances", "--config", str(cfg)]) == 0
    assert (tmp_path / "env_out" / "poles.csv").exists()
    assert "Gamma=" in capsys.readouterr().out


def test_cli_sweep_and_fit(tmp_path, capsys):
    assert main(["sweep-twilight", "--model", "square", "--omega", "6",
                 "--out", str(tmp_path)]) == 0
    path = capsys.readouterr().out.strip()
    assert main(["fit-slope", path]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert 5.0 < fit["slope"] < 9.0
    assert main(["sweep-twilight", "--out", str(tmp_path)]) == 2


def test_cli_timescales_and_compare(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONFIG)
    assert main(["timescales", "--config", str(cfg)]) == 0
    ts = json.loads(capsys.readouterr().out)
    assert ts["t_dawn"] < ts["t_twilight"]
    assert main(["compare-rates", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    row = json.loads(capsys.readouterr().out)
    assert row["spread_closed_pole"] < 0.05


def test_compare_rates_identity():
    s = sweep_geometry("square", 10.0, 12.0)
    row = compare_rates([s])[0]
    assert row.gamma_closed == pytest.approx(row.gamma_pole, rel=0.01)


def test_presets_defined():
    assert set(PRESETS) == {"paper-fig4a", "paper-fig4b", "paper-fig5"}
    assert PRESETS["paper-fig5"][0] == "pt"
