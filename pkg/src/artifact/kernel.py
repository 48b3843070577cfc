"""Pole-plus-branch decomposition K = f + g of the real-time kernel and a
direct-quadrature oracle.

Normalization: "paper" follows the printed spectral representation
K = int dE (1/2pi) (2E)^{-1/2} phi phi / |N|^2 e^{-iEt} with phi_L = sin(px);
"physical" is the unitary kernel, 8 pi times larger.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from .core_model import ModifiedSquareBarrier, PoschlTeller, PotentialSpec
from .errors import (ConvergenceError, DegenerateError, DomainError,
                     EarlyTimeError)
from .resonances import ResonancePole, find_poles, pole_denominator
from .scattering import log_c0d0, pt_amplitudes, pt_ratio

__all__ = ["KernelDecomposition", "BranchCoefficients", "decompose",
           "pole_coefficient", "branch_coefficient", "branch_coefficients",
           "kernel_late_time", "kernel_direct_quadrature", "branch_integral",
           "free_kernel", "residue_contour", "validity_check",
           "NORMALIZATION_FACTOR"]

NORMALIZATION_FACTOR = {"paper": 1.0, "physical": 8.0 * math.pi}
_SQRT_PI = math.sqrt(math.pi)


def _nf(normalization):
    try:
        return NORMALIZATION_FACTOR[normalization]
    except KeyError:
        raise ValueError(f"normalization must be 'paper' or 'physical', got {normalization!r}")


# ---------------------------------------------------------------------------
# pole residues

def _pt_x(spec, k):
    A1, A2, B1, B2 = pt_amplitudes(spec, k)
    return A2 * pt_ratio(spec, k) - B2


def pole_coefficient(spec: PotentialSpec, pole: ResonancePole, x, y,
                     normalization: str = "paper") -> complex:
    """Residue amplitude F(E_n, x, y) multiplying exp(-i E_n t), E_n complex."""
    p = complex(pole.p_complex)
    nf = _nf(normalization)
    if isinstance(spec, PoschlTeller):
        k = p
        am = lambda z: pole_denominator(spec, z)
        d = (am(k * (1 + 1e-6)) - am(k * (1 - 1e-6))) / (2e-6 * k)
        if pole.method == "refined":
            am_t = am(k.conjugate()).conjugate()
        else:
            # thick-barrier: A_-(k) ~ c (k - k_p) near the pole
            am_t = d.conjugate() * (k - k.conjugate())
        X = _pt_x(spec, k) * _pt_x(spec, k.conjugate()).conjugate()
        c = 2.0 * np.cos(k * (np.asarray(x) - np.asarray(y)))
        return -1j * X * c / (2.0 * math.pi * am_t * d) * nf
    kap = cmath.sqrt(2.0 * spec.v0 - p * p)
    B = cmath.sin(p * spec.a) - p / kap * cmath.cos(p * spec.a)
    f = lambda z: pole_denominator(spec, z)
    h = 1e-6 * abs(p)
    dD = (f(p + h) - f(p - h)) / (2.0 * h)
    S = np.sin(p * np.asarray(x)) * np.sin(p * np.asarray(y))
    return -p * S / (2.0 * math.pi * kap * B * dD) * nf


# ---------------------------------------------------------------------------
# branch cut

@dataclasses.dataclass(frozen=True)
class BranchCoefficients:
    s_E: float
    P: float
    Q: float
    leading: complex
    log_abs_leading: float
    gamma: Fraction
    subleading: complex = 0j


def _pt_branch_ratio(spec):
    # |A2 R - B2|^2 / (2 pi |A2 R + B2|^2) as k -> 0, read off at small k
    vals = []
    for k in (1e-6 * spec.alpha, 2e-6 * spec.alpha):
        A1, A2, B1, B2 = pt_amplitudes(spec, k)
        R = pt_ratio(spec, k)
        vals.append(abs(A2 * R - B2) ** 2 / (2.0 * math.pi * abs(A2 * R + B2) ** 2))
    return 2.0 * vals[0] - vals[1]


def branch_coefficients(spec: PotentialSpec, E0: float, x, y,
                        normalization: str = "paper") -> BranchCoefficients:
    """G(E0, x, y) of the G (E0 t)^{-gamma} tail, with s_E, P, Q."""
    nf = _nf(normalization)
    x, y = float(x), float(y)
    if isinstance(spec, PoschlTeller):
        r = _pt_branch_ratio(spec)
        g = math.sqrt(E0 / (2.0 * math.pi)) * r * cmath.exp(-0.25j * math.pi) * nf
        return BranchCoefficients(0.0, 0.0, 0.0, g, math.log(abs(g)), spec.gamma)
    k0 = math.sqrt(2.0 * spec.v0)
    W0 = k0 * (spec.b - spec.a)
    lcd = log_c0d0(spec)
    if not math.isfinite(lcd):
        raise DegenerateError("C(0)D(0) not representable")
    ln_n0 = math.log(2.0 * math.pi) + lcd
    # P, Q as printed; scaled by e^{-W0} for the s_E combination
    em = math.exp(-2.0 * W0)
    Ph = 0.5 * (spec.a * (1 + em) + (1 - em) / k0)
    Qh = 0.5 * (spec.b * (1 - em) + k0 * spec.a * (1 + em))
    Ch = math.exp(lcd - 2.0 * W0)
    s_E = math.exp(-2.0 * W0) * (k0 * math.sqrt(Ch) * Qh - k0 ** 2 * Ph ** 2) / (spec.v0 * Ch ** 2)
    try:
        P, Q = Ph * math.exp(W0), Qh * math.exp(W0)
    except OverflowError:
        P = Q = math.inf
    if isinstance(spec, ModifiedSquareBarrier):
        v1 = spec.v1
        w = math.sqrt((E0 - v1) / (-v1))
        lg = math.log(w * abs(x * y) * E0 ** 1.5 / (math.sqrt(2.0) * math.pi)) - ln_n0
        sgn = -math.copysign(1.0, x * y)
        g = sgn * math.exp(lg) * nf
        n0 = math.exp(ln_n0) if ln_n0 < 700 else math.inf
        sub = (1j * w * (E0 / v1) * x * y * (3.0 - 2.0 * v1 * (x * x + y * y))
               * E0 ** 1.5 / (3.0 * math.sqrt(2.0) * math.pi * n0)
               + 1j * w * (E0 / v1) * E0 ** 1.5 / (math.sqrt(2.0) * math.pi)
               * s_E / n0 * x * y) * nf
        return BranchCoefficients(s_E, P, Q, g, lg + math.log(nf), spec.gamma, sub)
    lg = math.log(math.sqrt(2.0) * E0 ** 1.5 * abs(x * y) / (4.0 * _SQRT_PI)) - ln_n0
    g = -(1 + 1j) / math.sqrt(2.0) * math.copysign(1.0, x * y) * math.exp(lg) * nf
    return BranchCoefficients(s_E, P, Q, g, lg + math.log(nf), spec.gamma)


def branch_coefficient(spec: PotentialSpec, E0: float, x, y,
                       normalization: str = "paper"):
    """(G, gamma)."""
    bc = branch_coefficients(spec, E0, x, y, normalization)
    return bc.leading, bc.gamma


# ---------------------------------------------------------------------------
# decomposition

@dataclasses.dataclass(frozen=True)
class KernelDecomposition:
    spec: PotentialSpec
    gamma: Fraction
    poles: tuple
    E0: float
    normalization: str = "paper"

    def F(self, n: int, x, y) -> complex:
        return pole_coefficient(self.spec, self.poles[n], x, y, self.normalization)

    def G(self, x, y) -> complex:
        return branch_coefficient(self.spec, self.E0, x, y, self.normalization)[0]

    @property
    def pole_coeffs(self):
        return [(pl, (lambda x, y, pl=pl: pole_coefficient(
            self.spec, pl, x, y, self.normalization))) for pl in self.poles]

    @property
    def gamma0(self) -> float:
        return self.poles[0].gamma_n

    def truncation_bound(self, t) -> float:
        """e^{-(Gamma_{last} - Gamma_0) t/2} style bound for omitted poles."""
        if len(self.poles) < 2:
            return 0.0
        return math.exp(-0.5 * (self.poles[-1].gamma_n - self.gamma0) * t)


def decompose(spec: PotentialSpec, poles=None, normalization: str = "paper") -> KernelDecomposition:
    if poles is None:
        poles = find_poles(spec)
    poles = tuple(poles)
    return KernelDecomposition(spec, spec.gamma, poles, poles[0].energy, normalization)


def validity_check(psi0, t: float, threshold: float = 10.0, x_grid=None) -> bool:
    """(t/2) max|psi''/psi| >= threshold on the support of psi0."""
    if t <= 0:
        return False
    if hasattr(psi0, "curvature_max"):
        c = psi0.curvature_max()
    else:
        xs = np.linspace(0, 1, 2001)[1:-1] if x_grid is None else np.asarray(x_grid)
        v = np.asarray(psi0(xs), dtype=complex)
        h = xs[1] - xs[0]
        d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / h ** 2
        ok = np.abs(v[1:-1]) > 1e-8 * np.abs(v).max()
        c = float(np.max(np.abs(d2[ok] / v[1:-1][ok])))
    return 0.5 * t * c >= threshold


def kernel_late_time(decomp: KernelDecomposition, t, x, y, psi0=None,
                     threshold: float = 10.0, parts: bool = False):
    """G (E0 t)^{-gamma} + sum_n F_n exp(-i E_n t); complex E_n carries Gamma_n."""
    t = float(t)
    if t <= 0:
        raise EarlyTimeError("t must be > 0")
    if psi0 is not None and not validity_check(psi0, t, threshold):
        raise EarlyTimeError("late-time expansion not valid at this t")
    g = decomp.G(x, y) * (decomp.E0 * t) ** (-float(decomp.gamma))
    f = 0j
    for pl in decomp.poles:
        f += pole_coefficient(decomp.spec, pl, x, y, decomp.normalization) * \
            cmath.exp(-1j * pl.E_complex * t)
    if parts:
        return f + g, f, g
    return f + g


# ---------------------------------------------------------------------------
# direct quadrature

def _inv_norm_sq_box(spec, p):
    """1/|N|^2 on arrays of (possibly complex) p."""
    p = np.asarray(p, dtype=complex)
    kap = np.sqrt(2.0 * spec.v0 - p * p)
    if isinstance(spec, ModifiedSquareBarrier):
        q = np.sqrt(p * p - 2.0 * spec.v1)
    else:
        q = p
    W = kap * (spec.b - spec.a)
    s, c = np.sin(p * spec.a), np.cos(p * spec.a)
    A = s + p / kap * c
    B = s - p / kap * c
    rho = (q - 1j * kap) / (q + 1j * kap)
    e2 = np.exp(-2.0 * W)
    cd = 0.25 * (1.0 + kap * kap / (q * q)) * (A + B * e2 / rho) * (A + rho * B * e2)
    inv = e2 / (2.0 * np.pi * cd)
    if isinstance(spec, ModifiedSquareBarrier):
        inv = inv * p / q
    return inv


def _spectral_weight(spec, E, x, y):
    """h(E) = (1/2pi)(2E)^{-1/2} phi(x) phi(y) / |N|^2 (paper normalization)
    with the free part 1/(2pi) removed."""
    p = np.sqrt(2.0 * E)
    S = np.sin(p * x) * np.sin(p * y)
    inv = _inv_norm_sq_box(spec, p)
    return (1.0 / (2.0 * np.pi)) / p * S * (inv - 1.0 / (2.0 * np.pi))


def free_kernel(t, x, y, normalization: str = "paper") -> complex:
    """Half-line free kernel in the chosen normalization."""
    pref = 0.5 * cmath.sqrt(2.0 * math.pi / (1j * t))
    val = pref * (cmath.exp(1j * (x - y) ** 2 / (2.0 * t))
                  - cmath.exp(1j * (x + y) ** 2 / (2.0 * t)))
    return val / (8.0 * math.pi ** 2) * _nf(normalization)


_GL = {n: np.polynomial.legendre.leggauss(n) for n in (10, 20)}


def _panel_sum(fun, lo, hi, n, chunk=20000):
    xg, wg = _GL[n]
    out = np.empty(len(lo), dtype=complex)
    for s in range(0, len(lo), chunk):
        l, h = lo[s:s + chunk], hi[s:s + chunk]
        mid = 0.5 * (l + h)
        half = 0.5 * (h - l)
        nodes = mid[:, None] + half[:, None] * xg[None, :]
        vals = fun(nodes.ravel()).reshape(nodes.shape)
        out[s:s + chunk] = (vals * wg[None, :]).sum(axis=1) * half
    return out


def _breakpoints(spec, t, e_max, poles, x, y):
    top = spec.barrier_top
    # oscillation of exp(-iEt) and of the p-dependence (period ~ pi/width in p)
    length = max(spec.b, abs(x) + abs(y), 1.0)
    pts = [0.0]
    e = 0.0
    h0 = 1e-6
    while e < e_max:
        p = math.sqrt(2.0 * e) if e > 0 else 0.0
        h = min(2.0 * math.pi / t, max(p, 0.05) * math.pi / (4.0 * length), 0.25 * max(top, 1.0))
        if e < 1e-3:
            h = min(h, max(h0, e))
        for pl in poles:
            En, G = pl.energy, max(pl.gamma_n, 1e-300)
            dist = abs(e - En)
            if dist < 40.0 * G:
                h = min(h, 0.25 * G)
            elif dist < 4000.0 * G:
                h = min(h, 0.05 * dist)
        t_cap = 2.0 * math.pi / t
        if h == t_cap and e > 1e-3 and max(p, 0.05) * math.pi / (4.0 * length) >= t_cap:
            # uniform stretch up to the next resonance zone: emit it in one go
            nxt = min([pl.energy - 4000.0 * max(pl.gamma_n, 1e-300) for pl in poles
                       if pl.energy - 4000.0 * max(pl.gamma_n, 1e-300) > e] + [e_max])
            n = int((nxt - e) / h)
            if n > 1:
                seg = e + h * np.arange(1, n)
                pts.extend(seg.tolist())
                e = float(seg[-1])
                continue
        e = min(e + h, e_max)
        pts.append(e)
    return np.array(pts)


def kernel_direct_quadrature(spec: PotentialSpec, t, x, y,
                             normalization: str = "paper", rtol: float = 1e-8,
                             e_max=None, return_error: bool = False, poles=None):
    """Ground-truth K(t, x, y) from the real-energy spectral integral.

    Square models: the free half-line kernel is added analytically and the
    remainder is integrated on Gauss-Legendre panels no wider than one period
    of exp(-iEt), refined around resonances.  A first-order endpoint term
    accounts for the tail beyond e_max.
    """
    if isinstance(spec, PoschlTeller):
        raise NotImplementedError("direct quadrature covers the square models")
    t = float(t)
    if t <= 0:
        raise DomainError("t must be > 0")
    x, y = float(x), float(y)
    if poles is None:
        try:
            poles = find_poles(spec)
        except Exception:
            poles = []
    top = spec.barrier_top
    if e_max is None:
        e_max = max(60.0 * top, 60.0)
    fun = lambda E: _spectral_weight(spec, E, x, y) * np.exp(-1j * E * t)
    pts = _breakpoints(spec, t, e_max, poles, x, y)
    lo, hi = pts[:-1], pts[1:]
    i20 = _panel_sum(fun, lo, hi, 20)
    err = np.abs(i20 - _panel_sum(fun, lo, hi, 10))
    n_panels = len(lo)
    done_val, done_err = 0.0j, 0.0
    for _ in range(8):
        total = abs(done_val + i20.sum())
        bad = err > rtol * max(total, 1e-300) / np.sqrt(n_panels)
        # accepted panels are summed in index order, so the result is deterministic
        done_val += i20[~bad].sum()
        done_err += float(err[~bad].sum())
        if not bad.any():
            lo = lo[:0]
            break
        mid = 0.5 * (lo[bad] + hi[bad])
        lo, hi = np.concatenate([lo[bad], mid]), np.concatenate([mid, hi[bad]])
        n_panels += int(bad.sum())
        i20 = _panel_sum(fun, lo, hi, 20)
        err = np.abs(i20 - _panel_sum(fun, lo, hi, 10))
    if len(lo):
        done_val += i20.sum()
        done_err += float(err.sum())
    val = complex(done_val)
    err = done_err
    # tail: int_{e_max}^inf h e^{-iEt} ~ h(e_max) e^{-i e_max t}/(i t)
    tail = complex(fun(np.array([e_max]))[0]) / (1j * t)
    val += tail
    est = err + abs(tail) * 0.1
    val += free_kernel(t, x, y, "paper")
    val *= _nf(normalization)
    if est * _nf(normalization) > max(1e-3 * abs(val), 1e-14):
        raise ConvergenceError(f"direct quadrature error estimate {est:.3g} vs |K| {abs(val):.3g}")
    if return_error:
        return val, est * _nf(normalization)
    return val


def branch_integral(spec: PotentialSpec, t, x, y, normalization: str = "paper") -> complex:
    """g(t) = int_0^{-i inf} dE h(E) e^{-iEt}, the full negative-imaginary-axis term.

    For the modified model this is the E > 0 spectral integral only; its
    weight stays finite at E = 0, so the ray decays like 1/t.
    """
    if isinstance(spec, PoschlTeller):
        raise NotImplementedError("branch ray integral covers the square models")
    t = float(t)
    x, y = float(x), float(y)

    def h(u):
        # E = -i u/t
        E = -1j * u / t
        p = np.sqrt(2.0 * np.asarray(E, dtype=complex))
        S = np.sin(p * x) * np.sin(p * y)
        inv = _inv_norm_sq_box(spec, p)
        val = (1.0 / (2.0 * np.pi)) / p * S * inv * np.exp(-u)
        return -1j / t * val

    re = quad(lambda u: complex(h(u)).real, 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
    im = quad(lambda u: complex(h(u)).imag, 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
    return complex(re, im) * _nf(normalization)


def residue_contour(spec: PotentialSpec, pole: ResonancePole, t, x, y,
                    n_points: int = 256, radius=None, normalization: str = "paper") -> complex:
    """-oint h(E) e^{-iEt} dE counter-clockwise around E_n on a small circle;
    equals F(E_n, x, y) e^{-i E_n t}."""
    En = pole.E_complex
    r = 0.25 * pole.gamma_n if radius is None else radius
    th = 2.0 * np.pi * np.arange(n_points) / n_points
    E = En + r * np.exp(1j * th)
    p = np.sqrt(2.0 * E)
    S = np.sin(p * x) * np.sin(p * y)
    inv = _inv_norm_sq_box(spec, p)
    h = (1.0 / (2.0 * np.pi)) / p * S * inv * np.exp(-1j * E * t)
    dE = 1j * r * np.exp(1j * th) * (2.0 * np.pi / n_points)
    return -complex((h * dE).sum()) * _nf(normalization)
