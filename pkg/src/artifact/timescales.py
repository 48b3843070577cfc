"""Dawn, twilight, t'_dawn and t_WKB from the pole-plus-branch kernel.

Crossing equation: (E0 t)^{-2 gamma} = |F/G|^2 exp(-Gamma0 t).  With
eps = (1/E0) |G/F|^{1/gamma} Gamma0/(2 gamma) its roots are
t = -(2 gamma/Gamma0) W_k(-eps), k = 0 (early) and k = -1 (twilight).

|G/F| conventions:
  "kernel"  - |G(x,y)/F(E0,x,y)| of the decomposition at the evaluation point
  "printed" - the printed small-x closed forms p0^2 |C D'_E|/(8 sqrt(pi) C0D0)
              (square), p0^3 |C D'_E|/(4 sqrt(2|V1|) pi C0D0) (modified),
              kernel value (Poschl-Teller)
  "figure"  - printed forms rescaled to reproduce the published slope data:
              x e^{2v} (square), x e^{v + W0} (modified), |G/F| = 1 (PT)
"""

from __future__ import annotations

import cmath
import dataclasses
import math

import numpy as np
from scipy.integrate import quad, simpson

from .core_model import (ModifiedSquareBarrier, PoschlTeller, PotentialSpec,
                         SquareBarrier, region_edge)
from .errors import BranchPointError, DomainError, WindowError
from .kernel import KernelDecomposition, branch_coefficients, decompose, pole_coefficient
from .resonances import find_poles, pole_denominator, real_resonance_momenta
from .scattering import eigenfunction, log_c0d0, solve
from .specfun import lambert_w, lambert_wm1_log

__all__ = ["SineMode", "Tabulated", "ModeWeights", "TimeScales", "Crossing",
           "project_initial_state", "sine_overlap", "f_tilde_thick",
           "log_gf_ratio", "crossing_times", "twilight_time",
           "twilight_asymptote", "dawn_time", "dawn_prime_time", "wkb_time",
           "crossing_equation_residual", "dawn_time_closed_form",
           "dawn_prime_closed_form", "compute_timescales", "CONVENTIONS"]

CONVENTIONS = ("kernel", "printed", "figure")
_BRANCH_EPS = 1e-12


# ---------------------------------------------------------------------------
# initial states

@dataclasses.dataclass(frozen=True)
class SineMode:
    """sqrt(2/a) sin(mu pi x/a) on [0, a]; width defaults to the well width."""
    mu: int
    width: float | None = None

    def __post_init__(self):
        if int(self.mu) != self.mu or self.mu < 1:
            raise DomainError("mu must be a positive integer")

    def values(self, x, a):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= a),
                        math.sqrt(2.0 / a) * np.sin(self.mu * math.pi * x / a), 0.0)

    def energy(self, a):
        return (math.pi * self.mu / a) ** 2 / 2.0


@dataclasses.dataclass(frozen=True, eq=False)
class Tabulated:
    """Samples of psi0 on a grid over [0, a]."""
    x: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 3 or np.any(np.diff(x) <= 0):
            raise DomainError("Tabulated grid must be increasing with >= 3 points")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=complex))

    def values(self, x, a=None):
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.x, self.psi.real, left=0.0, right=0.0)
        im = np.interp(x, self.x, self.psi.imag, left=0.0, right=0.0)
        return re + 1j * im


def _width(spec, psi0):
    if isinstance(psi0, SineMode):
        return psi0.width if psi0.width is not None else region_edge(spec)
    return float(psi0.x[-1])


def _check_state(spec, psi0, a):
    if isinstance(psi0, SineMode):
        if psi0.energy(a) >= spec.barrier_top:
            raise DomainError("sine mode above the barrier top")
        return
    if psi0.x[0] < 0 or psi0.x[-1] > region_edge(spec) * (1 + 1e-12):
        raise DomainError("tabulated state must live on [0, a]")
    norm = simpson(np.abs(psi0.psi) ** 2, x=psi0.x)
    if abs(norm - 1.0) > 1e-10:
        raise DomainError(f"initial state norm {norm!r} != 1")


def sine_overlap(p, a, mu):
    """int_0^a sin(p x) sqrt(2/a) sin(mu pi x/a) dx, regular at p = mu pi/a."""
    p = np.asarray(p, dtype=complex)
    u = mu * math.pi - p * a
    # sin(pa)/(pi^2 - p^2 a^2/mu^2) = (-1)^{mu+1} mu^2 sinc(u)/(mu pi + pa)
    return math.sqrt(2.0 / a) * a * math.pi * mu * np.sinc(u / math.pi) / (mu * math.pi + p * a)


@dataclasses.dataclass(frozen=True)
class ModeWeights:
    """c(p) = <phi_p|psi0> with int_0^inf |c|^2 dp = 1, and F~(E_n)."""
    c: object
    f_tilde: tuple

    def norm(self, p_max=None) -> float:
        return _c_norm(self.c, p_max)


def _c_norm(c, p_max=None):
    p_max = p_max or 200.0
    edges = np.linspace(0.0, p_max, 801)
    tot = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        tot += quad(lambda p: abs(c(p)) ** 2, lo, hi, limit=200, epsabs=1e-14)[0]
    return tot


def _coefficient_c(spec, psi0, a):
    def c(p):
        p = float(p)
        if p <= 0:
            return 0.0
        sol = solve(spec, p)
        n = math.exp(0.5 * sol.log_norm_sq.real)
        if isinstance(spec, PoschlTeller):
            xs = np.linspace(0.0, a, 401)
            phi = np.array([eigenfunction(sol, xi) for xi in xs])
            return complex(simpson(np.conj(phi) * psi0.values(xs, a), x=xs))
        if isinstance(psi0, SineMode):
            return complex(2.0 / n * sine_overlap(p, a, psi0.mu))
        xs = psi0.x
        return complex(2.0 / n * simpson(np.sin(p * xs) * psi0.psi, x=xs))
    return c


def _f_tilde(spec, pole, psi0, a, n_grid=1201):
    # int_L dx |int dy F(E_n, x, y) psi0(y)|^2, interference dropped
    xs = np.linspace(0.0, a, n_grid)
    F = pole_coefficient(spec, pole, xs[:, None], xs[None, :])
    inner = simpson(F * psi0.values(xs, a)[None, :], x=xs, axis=1)
    return float(simpson(np.abs(inner) ** 2, x=xs))


def project_initial_state(spec: PotentialSpec, psi0, poles=None) -> ModeWeights:
    a = _width(spec, psi0)
    _check_state(spec, psi0, a)
    if poles is None:
        poles = find_poles(spec)
    ft = tuple((pl.index, _f_tilde(spec, pl, psi0, a)) for pl in poles)
    return ModeWeights(_coefficient_c(spec, psi0, a), ft)


def f_tilde_thick(spec: PotentialSpec, n: int, mu: int) -> float:
    """Thick-barrier closed form of F~(E_n) for the sine mode mu (square models)."""
    if isinstance(spec, PoschlTeller):
        raise DomainError("closed form covers the square models")
    a, v0 = spec.a, spec.v0
    p0 = real_resonance_momenta(spec, 0)[0]
    kap = math.sqrt(2.0 * v0 - p0 * p0)
    pn = (n + 1) * math.pi / (a + 1.0 / kap)
    d = spec.b - spec.a
    den = (math.pi ** 2 - pn * pn * a * a / mu ** 2) ** 2
    return ((a / 2 + kap / (2 * v0)) * kap ** 2 / (2 * v0 * d * d) * (2.0 / a)
            * (a * a / mu ** 2) * math.pi ** 2 / den * math.exp(-4.0 * kap * d))


# ---------------------------------------------------------------------------
# |G/F|

def _log_cd_prime(spec, pole):
    """ln |C(p_n) dD/dE(p_n)|, exponentials kept in the log.

    At the pole A = -rho B e^{-2W}, so C_red = B e^{-2W}(1/rho - rho); the
    direct sum cancels catastrophically.
    """
    p = complex(pole.p_complex)
    co = solve(spec, p).coeffs
    q = p if not isinstance(spec, ModifiedSquareBarrier) else cmath.sqrt(p * p - 2.0 * spec.v1)
    kap = cmath.sqrt(2.0 * spec.v0 - p * p)
    rho = (q - 1j * kap) / (q + 1j * kap)
    h = 1e-6 * abs(p)
    d_red_p = (pole_denominator(spec, p + h) - pole_denominator(spec, p - h)) / (2.0 * h)
    W = co.W.real
    log_c = math.log(abs(co.c_pref * co.B * (1.0 / rho - rho))) - W
    log_dp = math.log(abs(co.d_pref * d_red_p)) + W
    return log_c + log_dp - math.log(abs(p))


def _printed_log_gf(spec, decomp):
    pole = decomp.poles[0]
    pR = pole.seed_real
    lcd = _log_cd_prime(spec, pole)
    if isinstance(spec, ModifiedSquareBarrier):
        k0 = math.sqrt(2.0 * spec.v0)
        W0 = k0 * (spec.b - spec.a)
        # C0D0 = k0^2 P^2 with the printed P = a cosh W0 + sinh W0/k0
        lP = W0 - math.log(2.0) + math.log(spec.a * (1 + math.exp(-2 * W0))
                                           + (1 - math.exp(-2 * W0)) / k0)
        lc0d0 = 2.0 * math.log(k0) + 2.0 * lP
        pre = math.log(pR ** 3 / (4.0 * math.sqrt(-2.0 * spec.v1) * math.pi))
    else:
        lc0d0 = log_c0d0(spec)
        pre = math.log(pR ** 2 / (8.0 * math.sqrt(math.pi)))
    return pre + lcd - lc0d0


def log_gf_ratio(spec: PotentialSpec, decomp: KernelDecomposition, x=None, y=None,
                 convention: str = "kernel", mode: str = "midwell", n: int = 0) -> float:
    """ln|G/F(E_n)|."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if convention != "kernel" and n != 0:
        raise ValueError("printed/figure conventions cover the n = 0 pole")
    if convention == "figure" and isinstance(spec, PoschlTeller):
        return 0.0
    if convention == "kernel" or isinstance(spec, PoschlTeller):
        edge = region_edge(spec)
        if mode == "small_x":
            x = y = 1e-4 * edge
        elif mode == "midwell":
            x = 0.5 * edge if x is None else x
            y = 0.5 * edge if y is None else y
        else:
            raise ValueError("mode must be 'midwell' or 'small_x'")
        bc = branch_coefficients(spec, decomp.E0, x, y)
        f = pole_coefficient(spec, decomp.poles[n], x, y)
        return bc.log_abs_leading - math.log(abs(f))
    lg = _printed_log_gf(spec, decomp)
    if convention == "figure":
        pR = decomp.poles[0].seed_real
        kR = math.sqrt(2.0 * spec.v0 - pR * pR)
        v = kR * (spec.b - spec.a)
        if isinstance(spec, ModifiedSquareBarrier):
            lg += v + math.sqrt(2.0 * spec.v0) * (spec.b - spec.a)
        else:
            lg += 2.0 * v
    return lg


# ---------------------------------------------------------------------------
# crossings

@dataclasses.dataclass(frozen=True)
class Crossing:
    t_early: float
    t_late: float
    log_eps: float
    degenerate: bool = False


def _log_eps(gamma, g0, e0, lgf):
    return -math.log(e0) + lgf / gamma + math.log(g0 / (2.0 * gamma))


def crossing_times(spec: PotentialSpec, decomp: KernelDecomposition, x=None, y=None,
                   convention: str = "kernel", mode: str = "midwell", n: int = 0) -> Crossing:
    """Both roots of the crossing equation for pole n."""
    gam = float(decomp.gamma)
    g0 = decomp.poles[n].gamma_n
    e0 = decomp.poles[n].energy
    lgf = log_gf_ratio(spec, decomp, x, y, convention, mode, n)
    le = _log_eps(gam, g0, e0, lgf)
    scale = 2.0 * gam / g0
    if abs(le + 1.0) <= _BRANCH_EPS:
        return Crossing(scale, scale, le, True)
    if le > -1.0:
        raise BranchPointError("no crossing: |G/F| too large (argument past -1/e)")
    late = -scale * lambert_wm1_log(le)
    eps = math.exp(le)
    if le < -30.0:
        # W0(-eps) = -eps - eps^2 - 3/2 eps^3
        early = scale * (eps + eps * eps + 1.5 * eps ** 3)
    else:
        early = -scale * lambert_w(0, -eps)
    return Crossing(early, late, le, False)


def twilight_time(spec: PotentialSpec, decomp: KernelDecomposition, x=None, y=None,
                  convention: str = "kernel", mode: str = "midwell") -> float:
    """t = -(2 gamma/Gamma0) W_{-1}(-(1/E0)|G/F|^{1/gamma} Gamma0/(2 gamma))."""
    return crossing_times(spec, decomp, x, y, convention, mode).t_late


def twilight_asymptote(spec: PotentialSpec, decomp: KernelDecomposition) -> float:
    """4 gamma kappa (b - a)/Gamma0, or (4 gamma/Gamma0)(pi kappa/alpha) for PT."""
    gam = float(decomp.gamma)
    pole = decomp.poles[0]
    pR = pole.seed_real
    if isinstance(spec, PoschlTeller):
        kap = math.sqrt(2.0 * spec.u0 - pR * pR)
        return 4.0 * gam / pole.gamma_n * math.pi * kap / spec.alpha
    kap = math.sqrt(2.0 * spec.v0 - pR * pR)
    return 4.0 * gam * kap * (spec.b - spec.a) / pole.gamma_n


def crossing_equation_residual(spec: PotentialSpec, decomp: KernelDecomposition, t,
                               x=None, y=None, convention: str = "kernel",
                               mode: str = "midwell", n: int = 0) -> float:
    """ln[(E0 t)^{-2 gamma}] - ln[|F/G|^2 e^{-Gamma0 t}], normalized by the
    size of the terms."""
    t = float(t)
    if t <= 0:
        raise DomainError("t must be > 0")
    gam = float(decomp.gamma)
    g0 = decomp.poles[n].gamma_n
    e0 = decomp.poles[n].energy
    lgf = log_gf_ratio(spec, decomp, x, y, convention, mode, n)
    lhs = -2.0 * gam * math.log(e0 * t)
    rhs = -2.0 * lgf - g0 * t
    return (lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


# ---------------------------------------------------------------------------
# dawn

@dataclasses.dataclass(frozen=True)
class TimeScales:
    t_dawn: float
    t_twilight: float
    t_dawn_prime: float
    t_wkb: float
    dominant_n: int
    used_fallback: bool
    degenerate: bool = False

    def ordered(self) -> bool:
        return self.t_wkb <= self.t_dawn_prime <= self.t_dawn < self.t_twilight

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class DawnResult:
    t_dawn: float
    dominant_n: int
    used_fallback: bool
    t_naive: float
    t_fallback: float


def dawn_time(spec: PotentialSpec, weights: ModeWeights, decomp: KernelDecomposition,
              x=None, y=None, convention: str = "kernel", mode: str = "midwell") -> DawnResult:
    """max{max_n ln[F~_n/F~_0]/(Gamma_n - Gamma_0), W0 crossing}."""
    ft = dict(weights.f_tilde)
    g = {pl.index: pl.gamma_n for pl in decomp.poles}
    f0 = ft[0]
    best, best_n = -math.inf, 0
    for n, fn in ft.items():
        if n == 0 or n not in g or fn <= 0 or f0 <= 0:
            continue
        val = math.log(fn / f0) / (g[n] - g[0])
        if val > best:
            best, best_n = val, n
    fb = crossing_times(spec, decomp, x, y, convention, mode).t_early
    if best >= fb:
        return DawnResult(best, best_n, False, best, fb)
    return DawnResult(fb, 0, True, best, fb)


def dawn_prime_time(spec: PotentialSpec, n: int, decomp: KernelDecomposition,
                    x=None, y=None, mode: str = "midwell") -> float:
    """Earlier crossing with Gamma_n, F(E_n) in place of Gamma_0, F(E_0)."""
    if n >= len(decomp.poles):
        raise DomainError(f"pole {n} not available")
    return crossing_times(spec, decomp, x, y, "kernel", mode, n).t_early


def wkb_time(spec: PotentialSpec, mu: int = 2, convention: str = "printed") -> float:
    """ma^2/(2 pi^2) as printed, or 2ma^2/(mu^2 pi^2) from the validity condition."""
    a = region_edge(spec)
    if convention == "printed":
        return a * a / (2.0 * math.pi ** 2)
    if convention == "validity":
        return 2.0 * a * a / (mu * mu * math.pi ** 2)
    raise ValueError("convention must be 'printed' or 'validity'")


def _kappa0(spec):
    p0 = real_resonance_momenta(spec, 0)[0]
    return math.sqrt(2.0 * spec.v0 - p0 * p0)


def dawn_prime_closed_form(spec: PotentialSpec, n: int = 1) -> float:
    """[(b - a)/(2 sqrt(2 pi) kappa p_n)]^{2/3} (square model)."""
    pn = real_resonance_momenta(spec, n)[n]
    return ((spec.b - spec.a) / (2.0 * math.sqrt(2.0 * math.pi) * _kappa0(spec) * pn)) ** (2.0 / 3.0)


def dawn_time_closed_form(spec: PotentialSpec, mu: int, poles=None) -> float:
    """Thick-barrier dawn time for the sine mode mu (square model)."""
    if poles is None:
        poles = find_poles(spec, n_max=max(mu - 1, 0))
    a = spec.a
    g0 = poles[0].gamma_n
    d0 = (math.pi ** 2 - poles[0].seed_real ** 2 * a * a / mu ** 2) ** 2
    best = -math.inf
    for pl in poles[1:mu]:
        dn = (math.pi ** 2 - pl.seed_real ** 2 * a * a / mu ** 2) ** 2
        best = max(best, math.log(d0 / dn) / (pl.gamma_n - g0))
    return max(best, dawn_prime_closed_form(spec, 0))


def compute_timescales(spec: PotentialSpec, psi0, decomp: KernelDecomposition | None = None,
                       x=None, y=None, mode: str = "midwell", wkb_convention: str = "printed",
                       weights: ModeWeights | None = None,
                       dawn_prime: str = "kernel") -> TimeScales:
    """dawn_prime: 'kernel' (W0 crossing with pole 1) or 'closed' (thick-barrier form)."""
    if dawn_prime not in ("kernel", "closed"):
        raise ValueError("dawn_prime must be 'kernel' or 'closed'")
    if dawn_prime == "closed" and not isinstance(spec, SquareBarrier):
        raise DomainError("closed-form dawn prime is defined for the square model")
    if decomp is None:
        decomp = decompose(spec)
    if weights is None:
        weights = project_initial_state(spec, psi0, decomp.poles)
    cr = crossing_times(spec, decomp, x, y, "kernel", mode)
    dawn = dawn_time(spec, weights, decomp, x, y, "kernel", mode)
    if dawn_prime == "closed":
        tp = dawn_prime_closed_form(spec, 1)
    elif len(decomp.poles) > 1:
        tp = dawn_prime_time(spec, 1, decomp, x, y, mode)
    else:
        tp = dawn.t_dawn
    mu = psi0.mu if isinstance(psi0, SineMode) else 2
    if cr.t_late <= dawn.t_dawn:
        raise WindowError("dawn time not before twilight time")
    return TimeScales(dawn.t_dawn, cr.t_late, tp, wkb_time(spec, mu, wkb_convention),
                      dawn.dominant_n, dawn.used_fallback, cr.degenerate)
