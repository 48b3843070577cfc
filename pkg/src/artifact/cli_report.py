"""Twilight sweeps, slope fits, rate comparison, the config pipeline and the CLI.

Sweeps hold omega fixed and vary the barrier parameter
v = kappa_R (b - a) (square models) or v = pi kappa/alpha (Poschl-Teller),
emitting plot-ready CSV with header v,Gamma0_t_twilight,status.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

from .core_model import (ModifiedSquareBarrier, PoschlTeller, PotentialSpec,
                         SquareBarrier, parse_config, tail_exponent)
from .errors import ArtifactError, ConfigError, DomainError, WindowError
from .kernel import decompose
from .resonances import (closed_form_rate, find_poles, gamma_times_period_check,
                         real_resonance_momenta)
from .timescales import SineMode, compute_timescales, twilight_time

__all__ = ["SweepSpec", "SweepRow", "SlopeFit", "sweep_geometry", "sweep_twilight",
           "write_sweep_csv", "read_sweep_csv", "fit_slope", "compare_rates",
           "RateRow", "tdse_rate", "run_pipeline", "run_checks", "PRESETS", "main",
           "OUT_ENV"]

OUT_ENV = "ARTIFACT_OUT"
DEFAULT_WINDOW = (10.0, 30.0)

# model -> (omega ladder, fixed parameters)
PRESETS = {
    "paper-fig4a": ("square", (6.0, 8.0, 10.0)),
    "paper-fig4b": ("msquare", (6.0, 8.0, 10.0)),
    "paper-fig5": ("pt", (40.0, 100.0, 200.0)),
}

_SQUARE_A = 2.0
_MSQ_V0, _MSQ_V1 = 3.0, -1.5
_PT_U0 = 0.5


# ---------------------------------------------------------------------------
# sweeps

@dataclasses.dataclass(frozen=True)
class SweepSpec:
    model: str
    omega: float
    v_min: float = 10.0
    v_max: float = 30.0
    n_samples: int = 21
    eval_point: tuple | None = None
    convention: str = "figure"

    def __post_init__(self):
        if self.model not in ("square", "msquare", "pt"):
            raise ConfigError(f"unknown model {self.model!r}")
        if not self.omega > 0:
            raise ConfigError("omega must be positive")
        if self.v_min < 2.0:
            raise ConfigError("v_min must be >= 2 (thick-barrier regime)")
        if not self.v_max > self.v_min:
            raise ConfigError("v_max must exceed v_min")
        if self.n_samples < 20:
            raise ConfigError("n_samples must be >= 20")

    @property
    def v_values(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_samples)


@dataclasses.dataclass(frozen=True)
class SweepRow:
    v: float
    value: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _pt_geometry(omega, v, u0=_PT_U0, max_iter=200):
    # alpha and the real root k depend on each other through v = pi kappa(k)/alpha
    b = omega / math.sqrt(2.0 * u0)
    alpha = math.pi * math.sqrt(2.0 * u0) / v
    for _ in range(max_iter):
        k = real_resonance_momenta(PoschlTeller(b=b, u0=u0, alpha=alpha), 0)[0]
        new = math.pi * math.sqrt(2.0 * u0 - k * k) / v
        if abs(new - alpha) <= 1e-15 * alpha:
            return PoschlTeller(b=b, u0=u0, alpha=new)
        alpha = new
    raise DomainError(f"no self-consistent alpha at omega={omega:g}, v={v:g}")


def sweep_geometry(model: str, omega: float, v: float) -> PotentialSpec:
    """Barrier with the given omega whose parameter v equals v at the real root."""
    if model == "square":
        a = _SQUARE_A
        v0 = 0.5 * (omega / a) ** 2
        p = real_resonance_momenta(SquareBarrier(a=a, b=a + 1.0, v0=v0), 0)[0]
        return SquareBarrier(a=a, b=a + v / math.sqrt(2.0 * v0 - p * p), v0=v0)
    if model == "msquare":
        s = ModifiedSquareBarrier.from_omega(omega, _MSQ_V0, _MSQ_V1, 1.0)
        p = real_resonance_momenta(s, 0)[0]
        return ModifiedSquareBarrier(a=s.a, b=s.a + v / math.sqrt(2.0 * _MSQ_V0 - p * p),
                                     v0=_MSQ_V0, v1=_MSQ_V1)
    if model == "pt":
        return _pt_geometry(omega, v)
    raise ConfigError(f"unknown model {model!r}")


def _sweep_point(args) -> SweepRow:
    sweep, v = args
    try:
        spec = sweep_geometry(sweep.model, sweep.omega, v)
        poles = find_poles(spec, n_max=0, refine=sweep.model != "pt")
        d = decompose(spec, poles)
        x, y = sweep.eval_point if sweep.eval_point is not None else (None, None)
        t_tw = twilight_time(spec, d, x, y, convention=sweep.convention)
        val = d.poles[0].gamma_n * t_tw
        if not math.isfinite(val):
            return SweepRow(float(v), math.nan, "error: non-finite value")
        return SweepRow(float(v), float(val))
    except (ArtifactError, ValueError, ArithmeticError) as exc:
        return SweepRow(float(v), math.nan, f"error: {type(exc).__name__}: {exc}")


def sweep_twilight(sweep: SweepSpec, threads: int = 1) -> list:
    """Gamma0 t_twilight at each v; failures are kept with an error status."""
    jobs = [(sweep, float(v)) for v in sweep.v_values]
    if threads <= 1:
        return [_sweep_point(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_sweep_point, jobs))


def write_sweep_csv(rows, path) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v", "Gamma0_t_twilight", "status"])
        for r in rows:
            w.writerow([repr(r.v), repr(r.value), r.status])
    return str(path)


def read_sweep_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(SweepRow(float(rec["v"]), float(rec["Gamma0_t_twilight"]),
                                 rec.get("status") or "ok"))
    return rows


# ---------------------------------------------------------------------------
# slopes

@dataclasses.dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    window: tuple
    n_points: int

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _as_xy(table):
    if len(table) and isinstance(table[0], SweepRow):
        ok = [r for r in table if r.ok]
        return np.array([r.v for r in ok]), np.array([r.value for r in ok])
    v, y = table
    return np.asarray(v, dtype=float), np.asarray(y, dtype=float)


def fit_slope(table, window=DEFAULT_WINDOW) -> SlopeFit:
    """Ordinary least squares of Gamma0 t_twilight on v inside the window."""
    v, y = _as_xy(table)
    lo, hi = (float(window[0]), float(window[1])) if window is not None else (-math.inf, math.inf)
    sel = (v >= lo) & (v <= hi) & np.isfinite(y)
    if sel.sum() < 10:
        raise WindowError(f"fit needs >= 10 points in [{lo:g}, {hi:g}], got {int(sel.sum())}")
    res = stats.linregress(v[sel], y[sel])
    return SlopeFit(float(res.slope), float(res.stderr), float(res.intercept),
                    (float(v[sel].min()), float(v[sel].max())), int(sel.sum()))


# ---------------------------------------------------------------------------
# rates

@dataclasses.dataclass(frozen=True)
class RateRow:
    model: str
    gamma_closed: float
    gamma_pole: float
    gamma_tdse: float
    gamma_T: float
    T_trans: float
    spread_closed_pole: float
    spread_tdse_pole: float
    spread_identity: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _model_name(spec):
    if isinstance(spec, ModifiedSquareBarrier):
        return "msquare"
    if isinstance(spec, SquareBarrier):
        return "square"
    return "pt"


def tdse_rate(spec: PotentialSpec, mu: int = 1, dx: float = 0.05, dt: float = 0.1,
              p_max: float | None = None, t_start: float | None = None,
              t_end: float | None = None, record_every: int = 10):
    """Fitted rate of ln P_L on [t_start, t_end] for a sine-mode start.

    t_end defaults to min(t_twilight, 4/Gamma0); t_start to max(t_dawn, t_end/20);
    p_max (light-cone budget) to 2.5 sqrt(2 V_top).
    Returns (rate, stderr, record, timescales).
    """
    from .tdse import GridSpec, evolve, fit_exponential_rate
    d = decompose(spec)
    g0 = d.poles[0].gamma_n
    psi0 = SineMode(mu)
    ts = compute_timescales(spec, psi0, d)
    if t_end is None:
        t_end = min(ts.t_twilight, 4.0 / g0)
    if t_start is None:
        t_start = max(ts.t_dawn, t_end / 20.0)
    if p_max is None:
        # the kink spectrum of the sine mode reaches well above the barrier top
        p_max = 2.5 * math.sqrt(2.0 * spec.barrier_top)
    grid = GridSpec.for_run(spec, t_end, dx, dt, p_max=p_max)
    rec = evolve(spec, psi0, grid, record_every=record_every)
    rate, err = fit_exponential_rate(rec, (t_start, min(t_end, rec.times[-1])))
    return rate, err, rec, ts


def compare_rates(specs, tdse: bool = False, tdse_options: dict | None = None) -> list:
    """Closed-form, refined-pole and (optionally) TDSE rates with the GammaT identity."""
    rows = []
    for spec in specs:
        g_pole = find_poles(spec, n_max=0)[0].gamma_n
        g_closed = closed_form_rate(spec, 0)
        gT, t_trans = gamma_times_period_check(spec, 0)
        g_tdse = math.nan
        if tdse and not isinstance(spec, PoschlTeller):
            g_tdse = tdse_rate(spec, **(tdse_options or {}))[0]
        rows.append(RateRow(_model_name(spec), g_closed, g_pole, g_tdse, gT, t_trans,
                            abs(g_closed - g_pole) / g_pole,
                            abs(g_tdse - g_pole) / g_pole,
                            abs(gT - t_trans) / t_trans))
    return rows


def _write_rows(rows, path):
    dicts = [r.as_dict() for r in rows]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(dicts[0]))
        for d in dicts:
            w.writerow([v if isinstance(v, str) else repr(float(v)) for v in d.values()])
    return str(path)


# ---------------------------------------------------------------------------
# invariant suite

def run_checks() -> list:
    """Fast invariant checks -> list of (name, passed, detail)."""
    import cmath

    from .scattering import solve
    from .specfun import gamma, hyp2f1, lambert_w

    out = []
    zs = -np.exp(-1.0) * np.logspace(-8, -1e-9, 200)
    r = 0.0
    for k in (0, -1):
        w = lambert_w(k, zs)
        r = max(r, float(np.max(np.abs(w * np.exp(w) - zs) / np.abs(zs))))
    out.append(("lambert_w residual", r <= 1e-13, f"max rel residual {r:.2e}"))

    z = 0.3 + 0.4j
    refl = abs(gamma(z) * gamma(1 - z) * cmath.sin(math.pi * z) / math.pi - 1)
    rec = abs(gamma(z + 1) / (z * gamma(z)) - 1)
    out.append(("gamma reflection/recursion", max(refl, rec) <= 1e-10,
                f"{refl:.1e}, {rec:.1e}"))

    a, b, c, zz = 0.3 + 0.2j, -0.7 + 0.1j, 1.4 + 0.0j, 1.02 * cmath.exp(2.5j)
    h = abs(hyp2f1(a, b, c, zz, "series") - hyp2f1(a, b, c, zz, "transform"))
    out.append(("hyp2f1 dual route", h <= 1e-10, f"{h:.1e}"))

    pt = PoschlTeller(b=20.0, u0=0.5, alpha=0.3)
    dev = 0.0
    for k in np.linspace(0.05, 2.0, 50):
        co = solve(pt, float(k)).coeffs
        dev = max(dev, abs(abs(co.a_plus_red) - abs(co.a_minus_red)) / abs(co.a_minus_red))
    out.append(("PT |A+| = |A-|", dev <= 1e-12, f"{dev:.1e}"))

    sq = SquareBarrier(a=2.0, b=3.44193, v0=3.0)
    ts = compute_timescales(sq, SineMode(1))
    out.append(("t_dawn < t_twilight", ts.t_dawn < ts.t_twilight,
                f"{ts.t_dawn:.4g} < {ts.t_twilight:.4g}"))
    return out


# ---------------------------------------------------------------------------
# pipeline

_STAGES = ("resonances", "kernel", "timescales", "tdse", "report")


def _int(cfg, key, default):
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        line = cfg.get("_lines", {}).get(key, "?")
        raise ConfigError(f"line {line}: {key} is not an integer: {cfg[key]!r}")


def _stages(cfg):
    raw = cfg.get("stages", ",".join(_STAGES))
    st = [s.strip() for s in raw.split(",") if s.strip()]
    bad = [s for s in st if s not in _STAGES]
    if bad:
        line = cfg.get("_lines", {}).get("stages", "?")
        raise ConfigError(f"line {line}: unknown stage(s) {bad}")
    return st


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Fraction):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _dump(summary, out):
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def run_pipeline(config, out_dir) -> int:
    """Run the configured stages, writing CSVs and summary.json; 0 on success."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec, cfg = parse_config(config)
    stages = _stages(cfg)
    mu = _int(cfg, "mu", 1)
    n_max = _int(cfg, "n_poles", max(mu, 1))
    params = {k: v for k, v in cfg.items() if k != "_lines"}
    summary = {"model": _model_name(spec), "parameters": params,
               "tail_exponent": float(tail_exponent(spec)), "stages": stages}
    try:
        poles = None
        if "resonances" in stages:
            poles = find_poles(spec, n_max=n_max)
            with open(out / "poles.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["n", "Re_p", "Im_p", "E", "Gamma", "method"])
                for p in poles:
                    w.writerow([p.index, repr(p.p_complex.real), repr(p.p_complex.imag),
                                repr(p.energy), repr(p.gamma_n), p.method])
            summary["Gamma0"] = poles[0].gamma_n
            summary["E0"] = poles[0].energy
        d = None
        if "kernel" in stages or "timescales" in stages:
            d = decompose(spec, poles)
            summary["gamma"] = d.gamma
        if "timescales" in stages:
            ts = compute_timescales(spec, SineMode(mu), d, cfg.get("x"), cfg.get("y"))
            summary.update(t_dawn=ts.t_dawn, t_twilight=ts.t_twilight,
                           t_dawn_prime=ts.t_dawn_prime, t_wkb=ts.t_wkb,
                           dawn_fallback=ts.used_fallback)
        if "tdse" in stages:
            from .tdse import detect_crossovers, write_timeseries_csv
            from .errors import NotFoundError
            rate, err, rec, _ = tdse_rate(spec, mu, dx=cfg.get("dx", 0.05), dt=cfg.get("dt", 0.1),
                                          p_max=cfg.get("p_max"), t_end=cfg.get("t_end"),
                                          record_every=_int(cfg, "record_every", 10))
            write_timeseries_csv(rec, out / "timeseries.csv")
            summary.update(fitted_gamma=rate, fitted_gamma_stderr=err,
                           norm_drift=rec.norm_drift)
            try:
                g0 = summary.get("Gamma0") or find_poles(spec, n_max=0)[0].gamma_n
                dawn_e, tw_e = detect_crossovers(rec, g0)
                summary.update(empirical_dawn=dawn_e, empirical_twilight=tw_e)
            except NotFoundError as exc:
                summary["empirical_crossovers"] = f"not found: {exc}"
        if "report" in stages:
            rows = compare_rates([spec])
            _write_rows(rows, out / "rates.csv")
            summary["rates"] = rows[0].as_dict()
    except ArtifactError as exc:
        summary["error"] = f"{type(exc).__name__}: {exc}"
        _dump(summary, out)
        return 1
    _dump(summary, out)
    return 0


def run_preset(name: str, out_dir, threads: int = 1, n_samples: int = 21,
               window=DEFAULT_WINDOW) -> dict:
    """One CSV per omega of the preset ladder; returns {omega: SlopeFit}."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    model, ladder = PRESETS[name]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fits = {}
    for om in ladder:
        sw = SweepSpec(model, om, window[0], window[1], n_samples)
        rows = sweep_twilight(sw, threads)
        write_sweep_csv(rows, out / f"{name}_omega{om:g}.csv")
        fits[om] = fit_slope(rows, window)
    return fits


# ---------------------------------------------------------------------------
# CLI

def _out_dir(args):
    return Path(args.out or os.environ.get(OUT_ENV) or "artifact_out")


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    return parse_config(Path(args.config))


def _cmd_resonances(args):
    spec, cfg = _load(args)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    poles = find_poles(spec, n_max=args.n_max)
    with open(out / "poles.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "Re_p", "Im_p", "E", "Gamma", "method"])
        for p in poles:
            w.writerow([p.index, repr(p.p_complex.real), repr(p.p_complex.imag),
                        repr(p.energy), repr(p.gamma_n), p.method])
    for p in poles:
        print(f"n={p.index} p={p.p_complex:.10g} E={p.energy:.10g} Gamma={p.gamma_n:.6e}")
    return 0


def _cmd_timescales(args):
    spec, cfg = _load(args)
    ts = compute_timescales(spec, SineMode(_int(cfg, "mu", args.mu)),
                            x=cfg.get("x"), y=cfg.get("y"))
    print(json.dumps(ts.as_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args):
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset:
        fits = run_preset(args.preset, out, args.threads, args.n_samples,
                          (args.v_min, args.v_max))
        for om, f in fits.items():
            print(f"omega={om:g} slope={f.slope:.4f} +- {f.stderr:.4f}")
        return 0
    if args.model is None or args.omega is None:
        raise ConfigError("sweep-twilight needs --preset or both --model and --omega")
    sw = SweepSpec(args.model, args.omega, args.v_min, args.v_max, args.n_samples)
    rows = sweep_twilight(sw, args.threads)
    path = write_sweep_csv(rows, out / f"sweep_{args.model}_omega{args.omega:g}.csv")
    print(path)
    bad = sum(not r.ok for r in rows)
    if bad:
        print(f"{bad} failed point(s), see status column", file=sys.stderr)
    return 0


def _cmd_fit(args):
    rows = read_sweep_csv(args.csv)
    f = fit_slope(rows, (args.v_min, args.v_max))
    print(json.dumps(f.as_dict(), sort_keys=True))
    return 0


def _cmd_evolve(args):
    from .tdse import write_timeseries_csv
    spec, cfg = _load(args)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    rate, err, rec, ts = tdse_rate(spec, _int(cfg, "mu", 1), dx=cfg.get("dx", 0.05),
                                   dt=cfg.get("dt", 0.1), p_max=cfg.get("p_max"),
                                   t_end=cfg.get("t_end"),
                                   record_every=_int(cfg, "record_every", 10))
    write_timeseries_csv(rec, out / "timeseries.csv")
    print(f"fitted Gamma = {rate:.6e} +- {err:.1e}, norm drift {rec.norm_drift:.1e}")
    return 0


def _cmd_compare(args):
    spec, cfg = _load(args)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    rows = compare_rates([spec], tdse=args.tdse)
    _write_rows(rows, out / "rates.csv")
    print(json.dumps(rows[0].as_dict(), indent=2))
    return 0


def _cmd_check(args):
    ok = True
    for name, passed, detail in run_checks():
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else 1


def _cmd_run(args):
    if args.check:
        return _cmd_check(args)
    if not args.config:
        raise ConfigError("--config is required for run")
    return run_pipeline(Path(args.config), _out_dir(args))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./artifact_out)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seedless", action="store_true",
                        help="reserved; all computations are deterministic")

    p = argparse.ArgumentParser(prog="artifact", description="Metastable decay time scales.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("resonances", parents=[common], help="complex poles")
    s.add_argument("--n-max", type=int, default=None)
    s.set_defaults(func=_cmd_resonances)

    s = sub.add_parser("timescales", parents=[common], help="dawn/twilight/t'_dawn/t_WKB")
    s.add_argument("--mu", type=int, default=1)
    s.set_defaults(func=_cmd_timescales)

    s = sub.add_parser("sweep-twilight", parents=[common], help="Gamma0 t_twilight vs v")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--model", choices=["square", "msquare", "pt"])
    s.add_argument("--omega", type=float)
    s.add_argument("--v-min", type=float, default=DEFAULT_WINDOW[0])
    s.add_argument("--v-max", type=float, default=DEFAULT_WINDOW[1])
    s.add_argument("--n-samples", type=int, default=21)
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("fit-slope", parents=[common], help="OLS slope of a sweep CSV")
    s.add_argument("csv")
    s.add_argument("--v-min", type=float, default=DEFAULT_WINDOW[0])
    s.add_argument("--v-max", type=float, default=DEFAULT_WINDOW[1])
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("evolve", parents=[common], help="Crank-Nicolson run and rate fit")
    s.set_defaults(func=_cmd_evolve)

    s = sub.add_parser("compare-rates", parents=[common], help="closed/pole/TDSE rates")
    s.add_argument("--tdse", action="store_true")
    s.set_defaults(func=_cmd_compare)

    s = sub.add_parser("check", parents=[common], help="invariant suite")
    s.set_defaults(func=_cmd_check)

    s = sub.add_parser("run", parents=[common], help="config-driven pipeline")
    s.add_argument("--check", action="store_true", help="run only the invariant suite")
    s.set_defaults(func=_cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ArtifactError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
