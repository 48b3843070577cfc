"""Stationary scattering states: matching coefficients, normalization,
eigenfunction reconstruction and transmission for the three models.

Square-model coefficients are stored log-scaled.  With rho = (q - i k)/(q + i k)
(k = kappa, q = p for the plain square barrier):

    D = (1 + i k/q)/2 * e^W * D_red,   D_red = A + rho   * B * e^{-2W}
    C = (1 - i k/q)/2 * e^W * C_red,   C_red = A + 1/rho * B * e^{-2W}

so nothing overflows for W up to several hundred.
"""

from __future__ import annotations

import cmath
import dataclasses
import math

import numpy as np

from .core_model import (ModifiedSquareBarrier, PoschlTeller, PotentialSpec,
                         SquareBarrier)
from .errors import DegenerateError, DomainError
from .specfun import hyp2f1, log_gamma

__all__ = ["SquareCoefficients", "PTCoefficients", "ScatteringSolution",
           "solve", "solve_square", "solve_modified", "solve_pt",
           "eigenfunction", "eigenfunction_derivative", "wronskian",
           "wronskian_defect", "transmission", "transmission_thick",
           "log_c0d0", "pt_amplitudes"]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclasses.dataclass(frozen=True)
class SquareCoefficients:
    A: complex
    B: complex
    c_red: complex
    d_red: complex
    c_pref: complex
    d_pref: complex
    W: complex

    @property
    def log_C(self) -> complex:
        return cmath.log(self.c_pref) + self.W + cmath.log(self.c_red)

    @property
    def log_D(self) -> complex:
        return cmath.log(self.d_pref) + self.W + cmath.log(self.d_red)

    @property
    def C(self) -> complex:
        return self.c_pref * self.c_red * cmath.exp(self.W)

    @property
    def D(self) -> complex:
        return self.d_pref * self.d_red * cmath.exp(self.W)


@dataclasses.dataclass(frozen=True)
class PTCoefficients:
    A1: complex
    A2: complex
    B1: complex
    B2: complex
    R: complex

    @property
    def a_minus_red(self) -> complex:
        """A1 R + B1 (incoming amplitude without unit-modulus phases)."""
        return self.A1 * self.R + self.B1

    @property
    def a_plus_red(self) -> complex:
        return self.A2 * self.R + self.B2


@dataclasses.dataclass(frozen=True)
class ScatteringSolution:
    spec: PotentialSpec
    p: complex
    kappa: complex
    q: complex
    coeffs: object
    wkb_exponent: complex
    log_norm_sq: complex

    @property
    def norm_sq(self) -> complex:
        """|N_p|^2 continued (may overflow to inf for very thick barriers)."""
        try:
            return cmath.exp(self.log_norm_sq)
        except OverflowError:
            return complex(math.inf, 0.0)

    @property
    def is_real(self) -> bool:
        return complex(self.p).imag == 0.0


# ---------------------------------------------------------------------------
# square and modified models

def _box(spec, p, q):
    p = complex(p)
    if p == 0:
        raise DomainError("p = 0 is not a scattering state; use log_c0d0")
    kap = cmath.sqrt(2.0 * spec.v0 - p * p)
    if kap == 0:
        raise DegenerateError("kappa = 0 (barrier-top energy)")
    a, b = spec.a, spec.b
    W = kap * (b - a)
    s, c = cmath.sin(p * a), cmath.cos(p * a)
    A = s + p / kap * c
    B = s - p / kap * c
    rho = (q - 1j * kap) / (q + 1j * kap)
    e2 = cmath.exp(-2.0 * W)
    coeffs = SquareCoefficients(
        A=A, B=B,
        c_red=A + B * e2 / rho, d_red=A + rho * B * e2,
        c_pref=0.5 * (1.0 - 1j * kap / q), d_pref=0.5 * (1.0 + 1j * kap / q),
        W=W)
    lns = _LOG_2PI + coeffs.log_C + coeffs.log_D
    if isinstance(spec, ModifiedSquareBarrier):
        lns += cmath.log(q / p)
    return ScatteringSolution(spec, p, kap, q, coeffs, W, lns)


def solve_square(spec: SquareBarrier, p) -> ScatteringSolution:
    if not isinstance(spec, SquareBarrier):
        raise TypeError("solve_square needs a SquareBarrier")
    return _box(spec, p, complex(p))


def modified_q(spec: ModifiedSquareBarrier, p) -> complex:
    return cmath.sqrt(complex(p) ** 2 - 2.0 * spec.v1)


def solve_modified(spec: ModifiedSquareBarrier, p) -> ScatteringSolution:
    if not isinstance(spec, ModifiedSquareBarrier):
        raise TypeError("solve_modified needs a ModifiedSquareBarrier")
    return _box(spec, p, modified_q(spec, p))


def log_c0d0(spec) -> float:
    """ln C(0)D(0) of the plain square barrier with the same a, b, v0.

    Exact p -> 0 limit: C(0)D(0) = k0^2 (a sinh W0 + cosh W0 / k0)^2.
    """
    k0 = math.sqrt(2.0 * spec.v0)
    W0 = k0 * (spec.b - spec.a)
    e2 = math.exp(-2.0 * W0)
    inner = 0.5 * (spec.a * (1.0 - e2) + (1.0 + e2) / k0)
    return 2.0 * math.log(k0) + 2.0 * (W0 + math.log(inner))


# ---------------------------------------------------------------------------
# Poschl-Teller

def pt_amplitudes(spec: PoschlTeller, k):
    """(A1, A2, B1, B2) from log-gamma sums."""
    s = spec.s
    ik = 1j * complex(k) / spec.alpha
    lg = log_gamma
    lA1 = lg(0.5) + lg(-ik) - lg(-s / 2 - ik / 2) - lg(0.5 + s / 2 - ik / 2)
    lA2 = lg(0.5) + lg(ik) - lg(-s / 2 + ik / 2) - lg(0.5 + s / 2 + ik / 2)
    lB1 = lg(1.5) + lg(-ik) - lg(-s / 2 - ik / 2 + 0.5) - lg(1 + s / 2 - ik / 2)
    lB2 = lg(1.5) + lg(ik) - lg(-s / 2 + ik / 2 + 0.5) - lg(1 + s / 2 + ik / 2)
    return (cmath.exp(lA1), cmath.exp(lA2), cmath.exp(lB1), cmath.exp(lB2))


def _pt_params(spec, k):
    s = spec.s
    ik2 = 0.5j * complex(k) / spec.alpha
    return (-0.5 * s + ik2, -0.5 * s - ik2)


def pt_ratio(spec: PoschlTeller, k) -> complex:
    """R(k) = C1/C2 from phi(0) = 0."""
    a1, b1 = _pt_params(spec, k)
    xb = spec.alpha * spec.b
    z = -math.sinh(xb) ** 2
    f1 = hyp2f1(a1, b1, 0.5, z)
    f2 = hyp2f1(a1 + 0.5, b1 + 0.5, 1.5, z)
    return math.sinh(xb) * f2 / f1


def solve_pt(spec: PoschlTeller, k) -> ScatteringSolution:
    if not isinstance(spec, PoschlTeller):
        raise TypeError("solve_pt needs a PoschlTeller spec")
    k = complex(k)
    if k == 0:
        raise DomainError("k = 0 is not a scattering state")
    s = spec.s
    if s.imag == 0.0 and abs(2.0 * s.real + 1.0 - round(2.0 * s.real + 1.0)) < 1e-14 \
            and round(2.0 * s.real + 1.0) % 2 == 1:
        raise DegenerateError("sqrt(1 - 8 u0/alpha^2) is an odd integer")
    A1, A2, B1, B2 = pt_amplitudes(spec, k)
    R = pt_ratio(spec, k)
    co = PTCoefficients(A1, A2, B1, B2, R)
    kap = cmath.sqrt(2.0 * spec.u0 - k * k)
    W = kap * math.pi / spec.alpha
    am = co.a_minus_red
    # |N|^2 = 2 pi |A_-|^2 on the real axis; continued as A_-(k) conj(A_-(conj k))
    if k.imag == 0.0:
        lns = _LOG_2PI + 2.0 * math.log(abs(am))
    else:
        kb = k.conjugate()
        am_b = (pt_amplitudes(spec, kb)[0] * pt_ratio(spec, kb)
                + pt_amplitudes(spec, kb)[2])
        lns = _LOG_2PI + cmath.log(am) + cmath.log(am_b.conjugate())
    return ScatteringSolution(spec, k, kap, k, co, W, lns)


def solve(spec: PotentialSpec, p) -> ScatteringSolution:
    if isinstance(spec, ModifiedSquareBarrier):
        return solve_modified(spec, p)
    if isinstance(spec, SquareBarrier):
        return solve_square(spec, p)
    if isinstance(spec, PoschlTeller):
        return solve_pt(spec, p)
    raise TypeError(f"unknown spec {spec!r}")


# ---------------------------------------------------------------------------
# eigenfunctions

def _box_phi(sol, x, deriv):
    spec = sol.spec
    co = sol.coeffs
    p, kap, q = sol.p, sol.kappa, sol.q
    a, b = spec.a, spec.b
    lnN = 0.5 * sol.log_norm_sq
    out = np.empty(x.shape, dtype=complex)
    mL = x < a
    mB = (x >= a) & (x < b)
    mR = x >= b
    xl = x[mL]
    if deriv:
        out[mL] = 2.0 * p * np.cos(p * xl) * np.exp(-lnN)
    else:
        out[mL] = 2.0 * np.sin(p * xl) * np.exp(-lnN)
    u = x[mB] - a
    ep = np.exp(kap * u - lnN)
    em = np.exp(-kap * u - lnN)
    if deriv:
        out[mB] = kap * (co.A * ep - co.B * em)
    else:
        out[mB] = co.A * ep + co.B * em
    r = x[mR] - b
    sc = np.exp(sol.wkb_exponent - lnN)
    up = co.c_pref * co.c_red * np.exp(1j * q * r)
    dn = co.d_pref * co.d_red * np.exp(-1j * q * r)
    if deriv:
        out[mR] = 1j * q * (up - dn) * sc
    else:
        out[mR] = (up + dn) * sc
    return out


def _pt_phi_unnorm(sol, xi):
    spec = sol.spec
    a1, b1 = _pt_params(spec, sol.p)
    z = -math.sinh(xi) ** 2
    f1 = hyp2f1(a1, b1, 0.5, z)
    f2 = hyp2f1(a1 + 0.5, b1 + 0.5, 1.5, z)
    return cmath.exp(-spec.s * math.log(math.cosh(xi))) * (
        sol.coeffs.R * f1 + math.sinh(xi) * f2)


def _pt_phi(sol, x, deriv):
    spec = sol.spec
    lnN = 0.5 * sol.log_norm_sq
    out = np.empty(x.shape, dtype=complex)
    for i, xv in enumerate(x):
        xi = spec.alpha * (xv - spec.b)
        if deriv:
            h = 1e-5 * max(1.0, abs(xv))
            fp = _pt_phi_unnorm(sol, spec.alpha * (xv + h - spec.b))
            fm = _pt_phi_unnorm(sol, spec.alpha * (xv - h - spec.b))
            out[i] = (fp - fm) / (2.0 * h)
        else:
            out[i] = _pt_phi_unnorm(sol, xi)
    return out * np.exp(-lnN)


def eigenfunction(sol: ScatteringSolution, x):
    """phi_p(x), normalized with N = sqrt(|N_p|^2).  Scalar or array."""
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise DomainError("eigenfunction needs x >= 0")
    if isinstance(sol.spec, PoschlTeller):
        out = _pt_phi(sol, xa, False)
    else:
        out = _box_phi(sol, xa, False)
    return complex(out[0]) if scalar else out


def eigenfunction_derivative(sol: ScatteringSolution, x):
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(sol.spec, PoschlTeller):
        out = _pt_phi(sol, xa, True)
    else:
        out = _box_phi(sol, xa, True)
    return complex(out[0]) if scalar else out


def wronskian(sol_k, sol_kp, x):
    """W_{k,k'}(x) = phi_k^* phi_k'' - phi_k^*' phi_k'."""
    f = np.conj(eigenfunction(sol_k, x))
    fp = np.conj(eigenfunction_derivative(sol_k, x))
    g = eigenfunction(sol_kp, x)
    gp = eigenfunction_derivative(sol_kp, x)
    return f * gp - fp * g


def wronskian_defect(sol_k, sol_kp, x, x_prime):
    """W_{k,k'}(x') - W_{k,k'}(x); equals (k'^2 - k^2) * int_x^x' phi_k^* phi_k'."""
    return complex(wronskian(sol_k, sol_kp, x_prime) - wronskian(sol_k, sol_kp, x))


# ---------------------------------------------------------------------------
# transmission

def _sinh_over(kap, d):
    # sinh(kap d)/kap, finite at kap -> 0
    w = kap * d
    if abs(w) < 1e-4:
        return d * (1.0 + w * w / 6.0)
    return cmath.sinh(w) / kap


def transmission(spec: PotentialSpec, p) -> float:
    """Exact transmission probability at real momentum p > 0."""
    p = float(p)
    if p <= 0:
        raise DomainError("transmission needs p > 0")
    if isinstance(spec, PoschlTeller):
        k, al = p, spec.alpha
        sh2 = math.sinh(math.pi * k / al) ** 2
        disc = 8.0 * spec.u0 / al ** 2 - 1.0
        if disc >= 0:
            arg = 0.5 * math.pi * math.sqrt(disc)
            if arg > 350 or math.pi * k / al > 350:
                return 1.0 / (1.0 + math.exp(2.0 * (arg - math.pi * k / al)))
            c2 = math.cosh(arg) ** 2
        else:
            c2 = math.cos(0.5 * math.pi * math.sqrt(-disc)) ** 2
        return sh2 / (sh2 + c2)
    d = spec.b - spec.a
    kap = cmath.sqrt(2.0 * spec.v0 - p * p)
    q = p
    if isinstance(spec, ModifiedSquareBarrier):
        q = math.sqrt(p * p - 2.0 * spec.v1)
    w = kap * d
    if w.real > 350:
        return transmission_thick(spec, p)
    so = _sinh_over(kap, d)
    ch = cmath.cosh(w)
    # T = 4 p q / ((p+q)^2 cosh^2 + (k^2 - p q)^2 sinh^2 / k^2)
    den = (p + q) ** 2 * ch * ch + (kap * kap - p * q) ** 2 * so * so
    return float((4.0 * p * q / den).real)


def transmission_thick(spec: PotentialSpec, p) -> float:
    """Thick-barrier limit of the transmission probability."""
    p = float(p)
    if isinstance(spec, PoschlTeller):
        kap = math.sqrt(2.0 * spec.u0 - p * p)
        x = math.pi * p / spec.alpha
        # 4 sinh^2(x) e^{-2 pi kappa/alpha}, evaluated in logs
        lsh = x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)
        return 4.0 * math.exp(2.0 * lsh - 2.0 * math.pi * kap / spec.alpha)
    kap = math.sqrt(2.0 * spec.v0 - p * p)
    W = kap * (spec.b - spec.a)
    q = p
    if isinstance(spec, ModifiedSquareBarrier):
        q = math.sqrt(p * p - 2.0 * spec.v1)
    return (16.0 * p * q * kap ** 2 * math.exp(-2.0 * W)
            / ((p * p + kap * kap) * (q * q + kap * kap)))
