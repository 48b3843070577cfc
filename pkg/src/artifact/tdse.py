"""Crank-Nicolson evolution on [0, x_max] with hard walls at both ends.

Records P_L(t), the flux j(a, t), the norm, and snapshots; extracts the flux
rate j(a)/P_L, fitted exponential rates, and empirical crossovers.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os

import numpy as np
from scipy.linalg import lapack

from .core_model import PotentialSpec, evaluate_potential, region_edge
from .errors import (ContainmentError, DomainError, NotFoundError,
                     StabilityError, WindowError)

__all__ = ["GridSpec", "EvolutionRecord", "evolve", "probability_left", "flux",
           "instantaneous_rate", "fit_exponential_rate", "detect_crossovers",
           "write_snapshot_csv", "write_timeseries_csv", "grid_potential"]


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Uniform grid x_j = j dx, j = 0..n_points-1, dx = x_max/(n_points-1).

    dt_factor bounds dt <= dt_factor * 2 dx^2 (0.1 by default); p_max is the
    fastest momentum budgeted by the light-cone check.
    """
    x_max: float
    n_points: int
    dt: float
    n_steps: int
    dt_factor: float | None = 0.1
    p_max: float | None = None

    def __post_init__(self):
        if self.n_points < 16 or self.x_max <= 0 or self.dt <= 0 or self.n_steps < 1:
            raise DomainError("grid needs n_points >= 16, x_max > 0, dt > 0, n_steps >= 1")

    @property
    def dx(self) -> float:
        return self.x_max / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.n_points)

    @property
    def t_total(self) -> float:
        return self.dt * self.n_steps

    @classmethod
    def for_run(cls, spec: PotentialSpec, t_total: float, dx: float, dt: float,
                p_max=None, margin: float = 0.9, dt_factor=None):
        """Smallest box meeting the light-cone budget, with a on a grid point."""
        p = p_max if p_max is not None else math.sqrt(2.0 * spec.barrier_top)
        far = _far_edge(spec)
        n_steps = int(math.ceil(t_total / dt))
        x_max = far + 1.02 * p * n_steps * dt / margin
        a = region_edge(spec)
        n_a = max(1, round(a / dx))
        dx = a / n_a
        n = int(math.ceil(x_max / dx)) + 1
        return cls(x_max=(n - 1) * dx, n_points=n, dt=dt,
                   n_steps=n_steps, dt_factor=dt_factor, p_max=p)

    def validate(self, spec: PotentialSpec):
        if self.dt_factor is not None and self.dt > self.dt_factor * 2.0 * self.dx ** 2:
            raise StabilityError(
                f"dt={self.dt:g} exceeds {self.dt_factor:g} * 2 dx^2 = {self.dt_factor * 2 * self.dx ** 2:g}")
        p = self.p_max if self.p_max is not None else math.sqrt(2.0 * spec.barrier_top)
        if p * self.t_total >= 0.9 * (self.x_max - _far_edge(spec)):
            raise ContainmentError("box too small for the light-cone budget")


def _far_edge(spec):
    return float(getattr(spec, "b", 0.0))


@dataclasses.dataclass
class EvolutionRecord:
    times: np.ndarray
    p_left: np.ndarray
    flux_a: np.ndarray
    norm: np.ndarray
    p_far: np.ndarray
    snapshots: list
    x: np.ndarray
    potential: np.ndarray
    i_a: int

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))


def grid_potential(spec: PotentialSpec, x: np.ndarray) -> np.ndarray:
    """V on the grid; the cell [x_j - dx/2, x_j + dx/2] holding a jump takes
    the cell average, so the barrier width is exact to first order in dx."""
    v = np.asarray(evaluate_potential(spec, x), dtype=float)
    dx = x[1] - x[0]
    for edge in (getattr(spec, "a", None), getattr(spec, "b", None)):
        if edge is None:
            continue
        j = int(round(edge / dx))
        if 0 < j < len(x) - 1:
            lo = evaluate_potential(spec, np.array([edge - 1e-9 * dx]))[0]
            hi = evaluate_potential(spec, np.array([edge + 1e-9 * dx]))[0]
            if np.isfinite(lo) and np.isfinite(hi):
                frac = (edge - (x[j] - 0.5 * dx)) / dx
                v[j] = frac * lo + (1.0 - frac) * hi
    v[~np.isfinite(v)] = 0.0
    return v


def _weights(n, i_a, dx):
    w = np.full(i_a + 1, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


def probability_left(psi, spec: PotentialSpec, dx=None, x=None) -> float:
    """Trapezoid integral of |psi|^2 over [0, a] (a on a grid point)."""
    if isinstance(psi, EvolutionRecord):
        return psi.p_left
    psi = np.asarray(psi)
    if dx is None:
        dx = x[1] - x[0]
    i_a = int(round(region_edge(spec) / dx))
    return float(np.dot(_weights(len(psi), i_a, dx), np.abs(psi[: i_a + 1]) ** 2))


def flux(psi, x0: float, dx: float) -> float:
    """(1/2i)(psi* psi' - psi psi*') at x0 by central differences."""
    j = int(round(x0 / dx))
    if j < 1 or j >= len(psi) - 1:
        raise DomainError("flux needs an interior grid point")
    d = (psi[j + 1] - psi[j - 1]) / (2.0 * dx)
    return float((np.conj(psi[j]) * d).imag)


def evolve(spec: PotentialSpec, psi0, grid: GridSpec, snapshot_times=(),
           record_every: int = 1, potential=None, check_grid: bool = True,
           far_fraction: float = 0.05, containment_tol: float = 1e-6,
           callback=None) -> EvolutionRecord:
    """Crank-Nicolson: (1 + i H dt/2) psi^{n+1} = (1 - i H dt/2) psi^n, H = -d^2/2 + V.

    psi0: SineMode/Tabulated state (values(x, a)) or a callable of x.
    potential: optional array or callable overriding the model potential on the grid.
    """
    if check_grid:
        grid.validate(spec)
    x = grid.x
    dx = grid.dx
    a = region_edge(spec)
    i_a = int(round(a / dx))
    if abs(x[i_a] - a) > 1e-9 * dx:
        raise DomainError("region edge a must sit on a grid point")
    if potential is None:
        v = grid_potential(spec, x)
    elif callable(potential):
        v = np.asarray(potential(x), dtype=float)
    else:
        v = np.asarray(potential, dtype=float)
    if hasattr(psi0, "values"):
        psi = np.asarray(psi0.values(x, a), dtype=complex)
    else:
        psi = np.asarray(psi0(x), dtype=complex)
    psi[0] = psi[-1] = 0.0
    w_all = np.full(grid.n_points, dx)
    w_all[0] = w_all[-1] = 0.5 * dx
    # unit norm on the grid, so drift measures the scheme alone
    psi /= math.sqrt(float(np.dot(w_all, np.abs(psi) ** 2)))
    inner = slice(1, grid.n_points - 1)
    m = grid.n_points - 2
    h = 0.5j * grid.dt
    diag = 1.0 / dx ** 2 + v[inner]
    off = -0.5 / dx ** 2
    # tridiagonal LU of (1 + i H dt/2), factored once
    lu = lapack.zgttrf(np.full(m - 1, h * off), 1.0 + h * diag, np.full(m - 1, h * off))
    if lu[-1] != 0:
        raise StabilityError("Crank-Nicolson matrix is singular")
    dl, d, du, du2, ipiv = lu[:-1]
    r_diag = 1.0 - h * diag
    r_off = -h * off
    # The implicit solve leaks exponentially small precursors (factor <= 1/2 per
    # point) across the whole box, and the subnormals they produce slow LAPACK
    # tenfold.  Without pivoting the leading LU block solves the truncated box,
    # so we step only [0, n_act) and grow it before anything above 1e-250
    # reaches its last half buffer.
    buf = 2048
    no_pivot = bool(np.all(ipiv == np.arange(1, m + 1)))
    active = [m]
    if no_pivot:
        nz = np.flatnonzero(psi[inner])
        active[0] = min(m, (int(nz[-1]) if nz.size else 0) + buf)

    def step_once(u):
        n = active[0]
        uu = u[:n]
        r = r_diag[:n] * uu
        r[1:] += r_off * uu[:-1]
        r[:-1] += r_off * uu[1:]
        if n == m:
            u[:] = lapack.zgttrs(dl, d, du, du2, ipiv, r)[0]
            return u
        u[:n] = lapack.zgttrs(dl[:n - 1], d[:n], du[:n - 1], du2[:n - 2], ipiv[:n], r)[0]
        if np.any(np.abs(u[n - buf // 2:n]) > 1e-250):
            active[0] = min(m, n + buf)
        return u

    w_left = _weights(grid.n_points, i_a, dx)
    i_far = int((1.0 - far_fraction) * (grid.n_points - 1))

    snap_steps = {int(round(t / grid.dt)): t for t in snapshot_times}
    rec_t, rec_pl, rec_j, rec_n, rec_far, snaps = [], [], [], [], [], []

    def record(step):
        dens = np.abs(psi) ** 2
        t = step * grid.dt
        rec_t.append(t)
        rec_pl.append(float(np.dot(w_left, dens[: i_a + 1])))
        rec_j.append(flux(psi, a, dx))
        rec_n.append(float(np.dot(w_all, dens)))
        rec_far.append(float(np.dot(w_all[i_far:], dens[i_far:])))
        if rec_far[-1] > containment_tol:
            raise ContainmentError(f"probability {rec_far[-1]:.3g} reached the far wall at t={t:g}")

    if 0 in snap_steps:
        snaps.append((0.0, np.abs(psi) ** 2))
    record(0)
    body = psi[inner].copy()
    for step in range(1, grid.n_steps + 1):
        step_once(body)
        if step % record_every == 0 or step in snap_steps or step == grid.n_steps:
            psi[inner] = body
            if step % record_every == 0 or step == grid.n_steps:
                record(step)
            if step in snap_steps:
                snaps.append((snap_steps[step], np.abs(psi) ** 2))
            if callback is not None:
                callback(step, psi)
    return EvolutionRecord(np.array(rec_t), np.array(rec_pl), np.array(rec_j),
                           np.array(rec_n), np.array(rec_far), snaps, x, v, i_a)


def instantaneous_rate(record: EvolutionRecord, floor: float = 1e-12) -> np.ndarray:
    """Gamma(t) = j(a, t)/P_L(t); NaN where P_L <= floor."""
    pl = record.p_left
    out = np.full_like(pl, np.nan)
    ok = pl > floor
    out[ok] = record.flux_a[ok] / pl[ok]
    return out


def fit_exponential_rate(record, window) -> tuple:
    """Least-squares slope of ln P_L vs t on the window -> (rate, stderr)."""
    t1, t2 = float(window[0]), float(window[1])
    times = record.times if isinstance(record, EvolutionRecord) else np.asarray(record[0])
    pl = record.p_left if isinstance(record, EvolutionRecord) else np.asarray(record[1])
    if not (t1 < t2) or t1 < times[0] - 1e-12 or t2 > times[-1] + 1e-12:
        raise WindowError(f"window [{t1:g}, {t2:g}] outside recorded times")
    sel = (times >= t1) & (times <= t2)
    if sel.sum() < 3:
        raise WindowError("fewer than 3 samples in the window")
    if np.any(pl[sel] <= 0):
        raise DomainError("non-positive P_L in the window")
    tt, yy = times[sel], np.log(pl[sel])
    A = np.vstack([tt, np.ones_like(tt)]).T
    coef, *_ = np.linalg.lstsq(A, yy, rcond=None)
    resid = yy - A @ coef
    dof = max(len(tt) - 2, 1)
    s2 = float(resid @ resid) / dof
    var = s2 / float(((tt - tt.mean()) ** 2).sum())
    return -float(coef[0]), math.sqrt(var)


def _log_slope(times, pl):
    return np.gradient(np.log(pl), times)


def detect_crossovers(record: EvolutionRecord, gamma0: float, band: float = 0.15,
                      dwell=None, t_min: float = 0.0) -> tuple:
    """Empirical (dawn, twilight).

    dawn: earliest t after which the log-slope of P_L stays within band of
    -Gamma0 for dwell (3/Gamma0 by default).  twilight: first t after dawn
    from which |slope| < Gamma0/2 for the rest of the record.
    """
    dwell = 3.0 / gamma0 if dwell is None else dwell
    t = record.times
    ok = record.p_left > 0
    t, pl = t[ok], record.p_left[ok]
    s = _log_slope(t, pl)
    inside = np.abs(s + gamma0) <= band * gamma0
    dawn = None
    n = len(t)
    # last index of each run of consecutive True values
    run_end = np.empty(n, dtype=int)
    nxt = n - 1
    for i in range(n - 1, -1, -1):
        if not inside[i]:
            nxt = i - 1
        run_end[i] = nxt
    for i in range(n):
        if t[i] < t_min or not inside[i]:
            continue
        if t[run_end[i]] - t[i] >= dwell:
            dawn = t[i]
            break
    if dawn is None:
        raise NotFoundError("no exponential window of the required dwell")
    slow = np.abs(s) < 0.5 * gamma0
    tail_ok = np.flip(np.cumprod(np.flip(slow)).astype(bool))
    idx = np.flatnonzero(tail_ok & (t > dawn))
    if idx.size == 0:
        raise NotFoundError("run too short to see the power-law tail")
    return float(dawn), float(t[idx[0]])


def write_snapshot_csv(record: EvolutionRecord, out_dir, stem: str = "snap_t") -> list:
    """One x,|psi|^2,V(x) file per snapshot."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i, (t, dens) in enumerate(record.snapshots):
        path = os.path.join(out_dir, f"{stem}{i}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "|psi|^2", "V(x)"])
            for xi, di, vi in zip(record.x, dens, record.potential):
                w.writerow([repr(float(xi)), repr(float(di)), repr(float(vi))])
        paths.append(path)
    return paths


def write_timeseries_csv(record: EvolutionRecord, path) -> str:
    """t, P_L, flux_a, norm, gamma_inst."""
    rate = instantaneous_rate(record)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "P_L", "flux_a", "norm", "gamma_inst"])
        for row in zip(record.times, record.p_left, record.flux_a, record.norm, rate):
            w.writerow([repr(float(v)) for v in row])
    return path
