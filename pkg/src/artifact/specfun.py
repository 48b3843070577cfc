"""Special functions: Lambert W (real branches 0, -1), complex log-gamma,
Gauss 2F1 on the negative real axis, and the lower-continued square root."""

import cmath
import decimal
import enum
import math

import numpy as np

from .errors import (BranchCutError, ConvergenceError, DegenerateError,
                     DomainError, PoleError)

__all__ = ["LambertBranch", "lambert_w", "lambert_wm1_log", "log_gamma",
           "gamma", "hyp2f1", "complex_sqrt_lower"]

_INV_E = math.exp(-1.0)
# 1/e = _INV_E + _INV_E_LO, so z + 1/e keeps its digits next to the branch point
_INV_E_LO = float(decimal.Decimal("0.3678794411714423215955237701614608674458")
                  - decimal.Decimal(_INV_E))
_BRANCH_TOL = 4e-16
# W = sum c_j p^j with p = +-sqrt(2(1 + e z)), highest power first
_BP_SERIES = (680863 / 43545600, -221 / 8505, 769 / 17280, -43 / 540, 11 / 72,
              -1 / 3, 1.0, -1.0)


class LambertBranch(enum.IntEnum):
    PRINCIPAL = 0
    MINUS1 = -1


# ---------------------------------------------------------------------------
# Lambert W

def _lambert_seed(k, z):
    w = np.empty_like(z)
    near = z < -0.25
    p = np.sqrt(np.maximum(2.0 * (math.e * z[near] + 1.0), 0.0))
    sgn = 1.0 if k == 0 else -1.0
    w[near] = -1.0 + sgn * p - p * p / 3.0 + sgn * 11.0 / 72.0 * p ** 3
    far = ~near
    zf = z[far]
    if k == 0:
        wf = np.log1p(np.maximum(zf, -0.25))
        big = zf > 3.0
        l1 = np.log(zf[big])
        l2 = np.log(l1)
        wf[big] = l1 - l2 + l2 / l1
        w[far] = wf
    else:
        l1 = np.log(-zf)
        l2 = np.log(-l1)
        w[far] = l1 - l2 + l2 / l1
    return w


def _halley(z, w, iters=60):
    # g(w) = w - z e^{-w}; exponent kept finite via log|z|
    zero = z == 0.0
    logz = np.log(np.where(zero, 1.0, np.abs(z)))
    sgn = np.sign(z)
    active = ~zero
    for _ in range(iters):
        if not active.any():
            break
        wa = w[active]
        u = sgn[active] * np.exp(logz[active] - wa)
        g = wa - u
        g1 = 1.0 + u
        g2 = -u
        den = 2.0 * g1 * g1 - g * g2
        with np.errstate(divide="ignore", invalid="ignore"):
            dw = np.where(den != 0.0, 2.0 * g * g1 / den, 0.0)
        wn = wa - dw
        w[active] = wn
        done = np.abs(dw) <= 2e-16 * np.maximum(1.0, np.abs(wn))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    w[zero] = 0.0
    return w


def lambert_w(branch, z):
    """Real Lambert W on branch 0 or -1; scalar or array input."""
    k = int(LambertBranch(branch))
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float)).copy()
    if np.isnan(z).any():
        raise DomainError("lambert_w: NaN argument")
    if (z + _INV_E + _INV_E_LO < -_BRANCH_TOL).any():
        raise DomainError("lambert_w: argument below -1/e")
    if k == -1 and (z >= 0.0).any():
        raise DomainError("lambert_w: branch -1 needs z < 0")
    gap = (z + _INV_E) + _INV_E_LO
    at_bp = gap <= 0.0
    z[at_bp] = -_INV_E
    w = _halley(z, _lambert_seed(k, z))
    w[at_bp] = -1.0
    # Halley loses ~eps/p where W'(z) blows up; the branch-point series is
    # good to 1e-18 for p < 1e-2
    p = np.sqrt(2.0 * math.e * np.maximum(gap, 0.0))
    tiny = (p < 1e-2) & ~at_bp
    if tiny.any():
        q = p[tiny] if k == 0 else -p[tiny]
        w[tiny] = np.polyval(_BP_SERIES, q)
    # keep results on the requested side of the branch point
    if k == 0:
        w = np.maximum(w, -1.0)
    else:
        w = np.minimum(w, -1.0)
    return float(w[0]) if scalar else w


def lambert_wm1_log(log_eps):
    """W_{-1}(-eps) given ln(eps); usable when eps underflows."""
    log_eps = float(log_eps)
    if log_eps > -1.0 + 1e-15:
        raise DomainError("lambert_wm1_log: eps must be <= 1/e")
    if log_eps > -30.0:
        return lambert_w(-1, -math.exp(log_eps))
    big_l = -log_eps
    # w = -u with u - ln u = L, u > 1
    u = big_l + math.log(big_l) + math.log(big_l) / big_l
    for _ in range(50):
        du = (u - math.log(u) - big_l) / (1.0 - 1.0 / u)
        u -= du
        if abs(du) <= 1e-16 * u:
            break
    return -u


# ---------------------------------------------------------------------------
# log-gamma (Lanczos g=7, n=9)

_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_TWO_PI = 2.0 * math.pi


def _lanczos_right(z):
    zm = z - 1.0
    x = np.full_like(zm, _LANCZOS[0])
    for i in range(1, 9):
        x = x + _LANCZOS[i] / (zm + i)
    t = zm + _G + 0.5
    val = _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(x)
    # pin the branch to the continuation of Stirling's series
    stir = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + 1.0 / (12.0 * z)
    k = np.round((val.imag - stir.imag) / _TWO_PI)
    return val - 1j * _TWO_PI * k


def _recurrence_branch(z):
    # principal continuation: lnG(z) = lnG(z+n) - sum ln(z+j), cut on Re<0 axis
    n = np.maximum(np.ceil(0.5 - z.real), 0).astype(int)
    nmax = int(n.max()) if n.size else 0
    acc = np.zeros_like(z)
    for j in range(nmax):
        m = n > j
        acc[m] += np.log(z[m] + j)
    return _lanczos_right(z + n) - acc


def _log_sin_pi(z):
    # log sin(pi z) up to 2 pi i; argument reduced to the nearest integer so
    # points next to a pole keep their relative accuracy
    n = np.round(z.real)
    r = z - n
    sign_term = 1j * np.pi * np.mod(n, 2)
    out = np.empty_like(z)
    mid = np.abs(r.imag) < 20.0
    out[mid] = np.log(np.sin(np.pi * r[mid]))
    up = ~mid & (r.imag > 0)
    out[up] = -1j * np.pi * r[up] + np.log(0.5j) + np.log1p(-np.exp(2j * np.pi * r[up]))
    dn = ~mid & (r.imag < 0)
    out[dn] = 1j * np.pi * r[dn] + np.log(-0.5j) + np.log1p(-np.exp(-2j * np.pi * r[dn]))
    return out + sign_term


def log_gamma(z):
    """Principal-branch complex log Gamma (cut along the negative real axis)."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    bad = (z.imag == 0.0) & (z.real <= 0.0) & (z.real == np.round(z.real))
    if bad.any():
        raise PoleError("log_gamma: pole at nonpositive integer")
    out = np.empty_like(z)
    right = z.real >= 0.5
    out[right] = _lanczos_right(z[right])
    left = ~right
    if left.any():
        zl = z[left]
        refl = math.log(math.pi) - _log_sin_pi(zl) - _lanczos_right(1.0 - zl)
        ref = _recurrence_branch(zl)
        k = np.round((refl.imag - ref.imag) / _TWO_PI)
        out[left] = refl - 1j * _TWO_PI * k
    if scalar:
        return complex(out[0])
    return out


def gamma(z):
    """Complex Gamma via exp(log_gamma)."""
    return np.exp(log_gamma(z))


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1

_MAX_TERMS = 10000
_TERM_TOL = 1e-16


def _is_pole(x):
    return x.imag == 0.0 and x.real <= 0.0 and x.real == round(x.real)


def _gauss_series(a, b, c, z):
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    quiet = 0
    for n in range(_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= _TERM_TOL * abs(total):
            quiet += 1
            if quiet >= 2:
                return total
        else:
            quiet = 0
    raise ConvergenceError("hyp2f1: series did not converge within 10000 terms")


def _series_route(a, b, c, z):
    if abs(z) <= 0.5:
        return _gauss_series(a, b, c, z)
    w = z / (z - 1.0)
    if abs(w) < 0.9:
        # Pfaff: 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a,c-b;c;z/(z-1))
        return (1.0 - z) ** (-a) * _gauss_series(a, c - b, c, w)
    if abs(z) < 0.9:
        return _gauss_series(a, b, c, z)
    raise ConvergenceError("hyp2f1: series route cannot reach this z")


def _gamma_ratio(num, den):
    # prod Gamma(num) / prod Gamma(den); zero if a denominator is a pole
    if any(_is_pole(d) for d in den):
        return 0.0j
    s = sum(log_gamma(x) for x in num) - sum(log_gamma(x) for x in den)
    return cmath.exp(s)


def _transform_route(a, b, c, z):
    d = a - b
    if d.imag == 0.0 and d.real == round(d.real):
        raise DegenerateError("hyp2f1: a - b is an integer; 1/z transform singular")
    if z.imag == 0.0 and z.real >= 1.0:
        raise BranchCutError("hyp2f1: z on [1, inf)")
    lmz = cmath.log(-z)
    zi = 1.0 / z
    t1 = (_gamma_ratio((c, b - a), (b, c - a)) * cmath.exp(-a * lmz)
          * _series_route(a, a - c + 1.0, a - b + 1.0, zi))
    t2 = (_gamma_ratio((c, a - b), (a, c - b)) * cmath.exp(-b * lmz)
          * _series_route(b, b - c + 1.0, b - a + 1.0, zi))
    return t1 + t2


def hyp2f1(a, b, c, z, method=None):
    """Gauss 2F1(a,b;c;z).

    method: None (auto), "series" or "transform".  Auto uses the Gauss
    series (with a Pfaff step when needed) for |z| <= 0.8, the 1/z linear
    transformation otherwise.
    """
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    if _is_pole(c):
        raise DomainError("hyp2f1: c is a nonpositive integer")
    if z == 0:
        return 1.0 + 0.0j
    if method is None:
        method = "series" if abs(z) <= 0.8 else "transform"
    if method == "series":
        return _series_route(a, b, c, z)
    if method == "transform":
        return _transform_route(a, b, c, z)
    raise ValueError("hyp2f1: unknown method %r" % (method,))


# ---------------------------------------------------------------------------
# momentum branch

def complex_sqrt_lower(E):
    """sqrt(E) with the cut on the negative real axis, continuous from below.

    E = -x - 0j (negative zero imaginary part) is read as the limit from the
    lower half-plane and maps to -i sqrt(x); E = -x + 0j raises.
    """
    E = complex(E)
    if E.imag == 0.0 and E.real < 0.0 and math.copysign(1.0, E.imag) > 0:
        raise BranchCutError("complex_sqrt_lower: E on the negative real axis")
    return cmath.sqrt(E)
