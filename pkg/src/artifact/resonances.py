"""Resonance poles, decay widths and closed-form rates."""

from __future__ import annotations

import cmath
import dataclasses
import math
import warnings

import numpy as np
from scipy.optimize import brentq

from .core_model import ModifiedSquareBarrier, PoschlTeller, PotentialSpec
from .errors import (BasinEscapeError, ConvergenceError, DegenerateError,
                     NoRootError, ThinBarrierWarning)
from .scattering import modified_q, pt_amplitudes, pt_ratio
from .specfun import complex_sqrt_lower, log_gamma

__all__ = ["ResonancePole", "PerturbativeExpansion", "real_resonance_momenta",
           "count_sub_barrier_roots", "perturbative_pole", "refine_pole",
           "closed_form_rate", "gamma_times_period_check", "thick_identity_pair",
           "pole_denominator", "pt_phase_residual", "find_poles",
           "square_pole_seed_approx", "pt_seed_approx"]


@dataclasses.dataclass(frozen=True)
class ResonancePole:
    index: int
    p_complex: complex
    seed_real: float
    refinement_residual: float = 0.0
    method: str = "perturbative"

    @property
    def E_complex(self) -> complex:
        return 0.5 * self.p_complex * self.p_complex

    @property
    def gamma_n(self) -> float:
        return -2.0 * self.E_complex.imag

    @property
    def energy(self) -> float:
        return self.E_complex.real


@dataclasses.dataclass(frozen=True)
class PerturbativeExpansion:
    delta: float
    p_correction: complex


# ---------------------------------------------------------------------------
# real roots

def square_pole_seed_approx(spec, n: int) -> float:
    """(n+1) pi / (a + 1/kappa_{R,0}) with kappa_{R,0} ~ sqrt(2 v0)."""
    return (n + 1) * math.pi / (spec.a + 1.0 / math.sqrt(2.0 * spec.v0))


def pt_seed_approx(spec: PoschlTeller, n: int) -> float:
    return (2 * n + 1) * math.pi / (2.0 * spec.phase_length)


def _a_fun(spec, p):
    # kappa * A_p; continuous up to the barrier top
    kap = math.sqrt(max(2.0 * spec.v0 - p * p, 0.0))
    return kap * math.sin(p * spec.a) + p * math.cos(p * spec.a)


def _box_roots(spec, n_max):
    ptop = math.sqrt(2.0 * spec.v0)
    out = []
    n = 0
    while len(out) <= n_max:
        lo = (n + 0.5) * math.pi / spec.a
        if lo >= ptop:
            break
        hi = min((n + 1) * math.pi / spec.a, ptop)
        out.append(brentq(lambda p: _a_fun(spec, p), lo, hi,
                          xtol=1e-15, rtol=1e-15, maxiter=200))
        n += 1
    return out


def _pt_rhs(spec, k):
    A1, A2, B1, B2 = pt_amplitudes(spec, k)
    return -0.5 * (A1 / A2 + B1 / B2)


def pt_phase_residual(spec: PoschlTeller, k) -> complex:
    """exp(2ikL) - rhs(k), the large-b pole condition."""
    return cmath.exp(2j * k * spec.phase_length) - _pt_rhs(spec, k)


def _pt_rhs_array(spec, k):
    k = np.asarray(k, dtype=complex)
    s = spec.s
    ik = 1j * k / spec.alpha
    lg = log_gamma
    lA1 = lg(0.5) + lg(-ik) - lg(-s / 2 - ik / 2) - lg(0.5 + s / 2 - ik / 2)
    lA2 = lg(0.5) + lg(ik) - lg(-s / 2 + ik / 2) - lg(0.5 + s / 2 + ik / 2)
    lB1 = lg(1.5) + lg(-ik) - lg(-s / 2 - ik / 2 + 0.5) - lg(1 + s / 2 - ik / 2)
    lB2 = lg(1.5) + lg(ik) - lg(-s / 2 + ik / 2 + 0.5) - lg(1 + s / 2 + ik / 2)
    return -0.5 * (np.exp(lA1 - lA2) + np.exp(lB1 - lB2))


def _pt_roots(spec, n_max):
    L = spec.phase_length
    ktop = math.sqrt(2.0 * spec.u0)
    n_grid = max(4000, int(60 * L * ktop / math.pi))
    ks = np.linspace(ktop * 1e-6, ktop * (1 - 1e-9), n_grid)

    def w(k):
        return cmath.exp(2j * k * L) / _pt_rhs(spec, k)

    ws = np.exp(2j * ks * L) / _pt_rhs_array(spec, ks)
    flip = (np.sign(ws[:-1].imag) != np.sign(ws[1:].imag)) & (ws[:-1].real > 0) & (ws[1:].real > 0)
    out = []
    for i in np.flatnonzero(flip):
        if len(out) > n_max:
            break
        out.append(brentq(lambda k: w(k).imag, ks[i], ks[i + 1],
                          xtol=1e-15, rtol=1e-15, maxiter=200))
    return out


def real_resonance_momenta(spec: PotentialSpec, n_max: int) -> list:
    """Real sub-barrier roots p_{R,0..n_max} of A_p = 0 (square models) or the
    PT phase condition."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    roots = _pt_roots(spec, n_max) if isinstance(spec, PoschlTeller) \
        else _box_roots(spec, n_max)
    if len(roots) <= n_max:
        raise NoRootError(f"only {len(roots)} sub-barrier roots exist")
    return roots[: n_max + 1]


def count_sub_barrier_roots(spec: PotentialSpec, cap: int = 50) -> int:
    try:
        real_resonance_momenta(spec, cap)
        return cap + 1
    except NoRootError as exc:
        return int(str(exc).split()[1])


# ---------------------------------------------------------------------------
# closed forms

def closed_form_rate(spec: PotentialSpec, n: int = 0, p_real=None) -> float:
    """Thick-barrier width of pole n."""
    p = real_resonance_momenta(spec, n)[n] if p_real is None else p_real
    if isinstance(spec, PoschlTeller):
        kap = math.sqrt(2.0 * spec.u0 - p * p)
        x = math.pi * p / spec.alpha
        lsh = x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)
        return 2.0 * p / spec.b * math.exp(2.0 * lsh - 2.0 * math.pi * kap / spec.alpha)
    kap = math.sqrt(2.0 * spec.v0 - p * p)
    W = kap * (spec.b - spec.a)
    _thin_check(W)
    if isinstance(spec, ModifiedSquareBarrier):
        q = math.sqrt(p * p - 2.0 * spec.v1)
        return (8.0 * p * p * q * kap ** 3 * math.exp(-2.0 * W)
                / ((1.0 + spec.a * kap) * (p * p + kap * kap) * (q * q + kap * kap)))
    return (8.0 * p ** 3 * kap ** 3 * math.exp(-2.0 * W)
            / ((1.0 + spec.a * kap) * (p * p + kap * kap) ** 2))


def thick_identity_pair(model: str, p, kappa, W, q=None, a=1.0, x_pt=None):
    """(Gamma*T, T_trans) from the a -> infinity (or b -> infinity) closed forms.

    square/msquare: Gamma_inf = 8 p^2 q kappa^2 e^{-2W}/(a (p^2+k^2)(q^2+k^2)),
    T = 2a/p.  pt: Gamma = (2k/b) sinh^2(x) e^{-2W}, T = 2b/k, with
    x = pi k/alpha passed as x_pt and W = pi kappa/alpha; a plays the role of b.
    """
    e2 = np.exp(-2.0 * W)
    if model == "pt":
        g = 2.0 * p / a * np.sinh(x_pt) ** 2 * e2
        return g * (2.0 * a / p), 4.0 * np.sinh(x_pt) ** 2 * e2
    if model == "square" or q is None:
        q = p
    g = 8.0 * p * p * q * kappa ** 2 * e2 / (a * (p * p + kappa ** 2) * (q * q + kappa ** 2))
    t = 16.0 * p * q * kappa ** 2 * e2 / ((p * p + kappa ** 2) * (q * q + kappa ** 2))
    return g * (2.0 * a / p), t


def gamma_times_period_check(spec: PotentialSpec, n: int = 0):
    """(Gamma * T, thick-limit T_trans) at the real root of pole n.

    T = 2(a + 1/kappa)/p for the square models (reduces to 2a/p as a -> inf),
    T = 2b/k for PT.
    """
    from .scattering import transmission_thick
    p = real_resonance_momenta(spec, n)[n]
    g = closed_form_rate(spec, n, p_real=p)
    if isinstance(spec, PoschlTeller):
        period = 2.0 * spec.b / p
    else:
        kap = math.sqrt(2.0 * spec.v0 - p * p)
        period = 2.0 * (spec.a + 1.0 / kap) / p
    return g * period, transmission_thick(spec, p)


# ---------------------------------------------------------------------------
# complex poles

def _thin_check(W):
    if math.exp(-2.0 * W) > 0.01:
        warnings.warn(f"thin barrier: delta^2 = {math.exp(-2.0 * W):.3g} > 0.01",
                      ThinBarrierWarning, stacklevel=3)


def _box_q(spec, p):
    if isinstance(spec, ModifiedSquareBarrier):
        return modified_q(spec, p)
    return complex(p)


def pole_denominator(spec: PotentialSpec, p) -> complex:
    """Reduced pole function: D_red (square models) or A1 R + B1 (PT)."""
    p = complex(p)
    if isinstance(spec, PoschlTeller):
        A1, _, B1, _ = pt_amplitudes(spec, p)
        return A1 * pt_ratio(spec, p) + B1
    kap = cmath.sqrt(2.0 * spec.v0 - p * p)
    q = _box_q(spec, p)
    s, c = cmath.sin(p * spec.a), cmath.cos(p * spec.a)
    A = s + p / kap * c
    B = s - p / kap * c
    rho = (q - 1j * kap) / (q + 1j * kap)
    return A + rho * B * cmath.exp(-2.0 * kap * (spec.b - spec.a))


def _num_deriv(f, z, rel=1e-6):
    h = rel * max(abs(z), 1e-300)
    return (f(z + h) - f(z - h)) / (2.0 * h)


def perturbative_pole(spec: PotentialSpec, n: int = 0):
    """Thick-barrier pole p_R + delta^2 p_C (square models) or
    E = k_R^2/2 - i Gamma/2 from the closed-form rate (PT)."""
    pR = real_resonance_momenta(spec, n)[n]
    if isinstance(spec, PoschlTeller):
        g = closed_form_rate(spec, n, p_real=pR)
        kap = math.sqrt(2.0 * spec.u0 - pR * pR)
        pc = complex_sqrt_lower(complex(0.5 * pR * pR, -0.5 * g) * 2.0)
        delta = math.exp(-math.pi * kap / spec.alpha)
        pole = ResonancePole(n, pc, pR, method="perturbative")
        return pole, PerturbativeExpansion(delta, (pc - pR) / delta ** 2 if delta > 0 else 0j)
    kap = math.sqrt(2.0 * spec.v0 - pR * pR)
    W = kap * (spec.b - spec.a)
    _thin_check(W)
    q = _box_q(spec, pR).real
    rho = (q - 1j * kap) / (q + 1j * kap)
    pC = 2.0 * pR * kap * kap * rho / ((pR * pR + kap * kap) * (1.0 + spec.a * kap))
    delta = math.exp(-W)
    pole = ResonancePole(n, pR + delta * delta * pC, pR, method="perturbative")
    return pole, PerturbativeExpansion(delta, pC)


def refine_pole(spec: PotentialSpec, seed: ResonancePole, max_iter: int = 50,
                tol: float = 1e-10) -> ResonancePole:
    """Newton on the reduced pole function with a central-difference derivative."""
    f = lambda z: pole_denominator(spec, z)
    p = complex(seed.p_complex)
    for it in range(max_iter):
        try:
            val = f(p)
            d = _num_deriv(f, p)
        except (OverflowError, ZeroDivisionError, DegenerateError) as exc:
            raise ConvergenceError(f"refine_pole: evaluation failed at p={p:.6g}: {exc}")
        if d == 0:
            raise ConvergenceError("refine_pole: zero derivative")
        step = val / d
        p_new = p - step
        if p_new.imag >= 0:
            raise BasinEscapeError("refine_pole: iterate left the lower half-plane")
        done = (abs(step.real) <= 4e-16 * abs(p_new.real) + 1e-300
                and abs(step.imag) <= 1e-13 * abs(p_new.imag))
        if abs(p_new - seed.p_complex) > 2.0 * abs(seed.seed_real):
            raise BasinEscapeError("refine_pole: iterate wandered away from the seed")
        p = p_new
        if done:
            break
    else:
        it = max_iter
    val = f(p)
    d = _num_deriv(f, p)
    res = abs(val) / (abs(d) * abs(p))
    if res > tol or not math.isfinite(res):
        raise ConvergenceError(f"refine_pole: residual {res:.3g} after {it + 1} iterations")
    if abs(p.real - seed.seed_real) > 0.5 * abs(seed.seed_real):
        raise BasinEscapeError("refine_pole: converged to a different root")
    return ResonancePole(seed.index, p, seed.seed_real, float(res), method="refined")


def find_poles(spec: PotentialSpec, n_max=None, refine: bool = True) -> list:
    """All sub-barrier poles (or the first n_max + 1), refined when possible.

    PT poles fall back to the perturbative (closed-form) pole when Newton
    cannot resolve Im k in double precision.
    """
    if n_max is None:
        n_max = count_sub_barrier_roots(spec) - 1
        if n_max < 0:
            raise NoRootError("no sub-barrier resonance")
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ThinBarrierWarning)
        for n in range(n_max + 1):
            seed, _ = perturbative_pole(spec, n)
            if refine:
                try:
                    seed = refine_pole(spec, seed)
                except ConvergenceError:
                    if not isinstance(spec, PoschlTeller):
                        raise
                    # thick-barrier fallback is meaningless near the top or
                    # once the width swamps the level spacing
                    kap = math.sqrt(max(2.0 * spec.u0 - seed.seed_real ** 2, 0.0))
                    spacing = seed.seed_real - (out[-1].seed_real if out else 0.0)
                    if (math.pi * kap / spec.alpha < 1.0
                            or abs(seed.p_complex.imag) > 0.25 * spacing):
                        break
            out.append(seed)
    return out
