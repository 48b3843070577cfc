"""Units, the three barrier models, their regions and geometry."""

from __future__ import annotations

import dataclasses
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateError, DomainError

__all__ = ["UnitsContext", "PotentialSpec", "SquareBarrier",
           "ModifiedSquareBarrier", "PoschlTeller", "BarrierGeometry",
           "INFINITE", "evaluate_potential", "classify_region",
           "tail_exponent", "barrier_geometry", "pt_turning_points",
           "parse_config", "spec_from_mapping"]

INFINITE = math.inf  # hard-wall sentinel for x < 0


@dataclasses.dataclass(frozen=True)
class UnitsContext:
    """hbar and mass of the caller's unit system.

    Internal units have hbar = m = 1 with the length unit unchanged, so
    V_int = m V / hbar^2, t_int = hbar t / m, p_int = p / hbar.
    """

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"UnitsContext.{name} must be finite and > 0")

    def energy_in(self, e):
        return e * self.mass / self.hbar ** 2

    def energy_out(self, e):
        return e * self.hbar ** 2 / self.mass

    def time_in(self, t):
        return t * self.hbar / self.mass

    def time_out(self, t):
        return t * self.mass / self.hbar

    def rate_in(self, g):
        return g * self.mass / self.hbar

    def rate_out(self, g):
        return g * self.hbar / self.mass

    def momentum_in(self, p):
        return p / self.hbar

    def momentum_out(self, p):
        return p * self.hbar

    def spec_in(self, spec: "PotentialSpec") -> "PotentialSpec":
        """Rescale a spec given in these units into internal units."""
        return spec._map_energies(self.energy_in)

    def spec_out(self, spec: "PotentialSpec") -> "PotentialSpec":
        return spec._map_energies(self.energy_out)


class PotentialSpec:
    """Base class of the three hard-wall barrier models."""

    kind = ""

    @property
    def gamma(self) -> Fraction:
        raise NotImplementedError

    @property
    def barrier_top(self) -> float:
        raise NotImplementedError

    def _map_energies(self, f):
        raise NotImplementedError

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["model"] = self.kind
        return d


def _check_pos(name, val):
    if not (math.isfinite(val) and val > 0):
        raise DomainError(f"{name} must be finite and > 0, got {val!r}")


@dataclasses.dataclass(frozen=True)
class SquareBarrier(PotentialSpec):
    """V = 0 on [0,a), v0 on [a,b], 0 beyond b; hard wall at x = 0."""

    a: float
    b: float
    v0: float
    kind = "square"

    def __post_init__(self):
        _check_pos("a", self.a)
        _check_pos("v0", self.v0)
        if not self.b > self.a:
            raise DomainError("need 0 < a < b")

    @classmethod
    def from_omega(cls, omega_a, a, b):
        """omega_a = a sqrt(2 v0) fixes v0 at given a."""
        _check_pos("omega_a", omega_a)
        return cls(a=a, b=b, v0=0.5 * (omega_a / a) ** 2)

    @property
    def omega(self):
        return self.a * math.sqrt(2.0 * self.v0)

    @property
    def gamma(self):
        return Fraction(3, 2)

    @property
    def barrier_top(self):
        return self.v0

    def _map_energies(self, f):
        return dataclasses.replace(self, v0=f(self.v0))


@dataclasses.dataclass(frozen=True)
class ModifiedSquareBarrier(PotentialSpec):
    """V = 0 on [0,a), v0 on [a,b], v1 < 0 beyond b; hard wall at x = 0."""

    a: float
    b: float
    v0: float
    v1: float
    kind = "msquare"

    def __post_init__(self):
        _check_pos("a", self.a)
        _check_pos("v0", self.v0)
        if not self.b > self.a:
            raise DomainError("need 0 < a < b")
        if not (math.isfinite(self.v1) and self.v1 < 0):
            raise DomainError("v1 must be < 0")

    @classmethod
    def from_omega(cls, omega_b, v0, v1, b_minus_a):
        """omega_b = a sqrt(2(v0 - v1)) fixes a at given v0, v1."""
        _check_pos("omega_b", omega_b)
        a = omega_b / math.sqrt(2.0 * (v0 - v1))
        return cls(a=a, b=a + b_minus_a, v0=v0, v1=v1)

    @property
    def omega(self):
        return self.a * math.sqrt(2.0 * (self.v0 - self.v1))

    @property
    def gamma(self):
        return Fraction(2)

    @property
    def barrier_top(self):
        return self.v0

    def _map_energies(self, f):
        return dataclasses.replace(self, v0=f(self.v0), v1=f(self.v1))


@dataclasses.dataclass(frozen=True)
class PoschlTeller(PotentialSpec):
    """V = u0 / cosh^2(alpha (x - b)) for x >= 0; hard wall at x = 0."""

    b: float
    u0: float
    alpha: float
    kind = "pt"

    def __post_init__(self):
        _check_pos("b", self.b)
        _check_pos("u0", self.u0)
        _check_pos("alpha", self.alpha)

    @classmethod
    def from_omega(cls, omega_c, u0, alpha):
        """omega_c = b sqrt(2 u0) fixes b at given u0."""
        _check_pos("omega_c", omega_c)
        return cls(b=omega_c / math.sqrt(2.0 * u0), u0=u0, alpha=alpha)

    @property
    def omega(self):
        return self.b * math.sqrt(2.0 * self.u0)

    @property
    def gamma(self):
        return Fraction(1, 2)

    @property
    def barrier_top(self):
        return self.u0

    @property
    def s(self) -> complex:
        """s = (-1 + sqrt(1 - 8 u0 / alpha^2)) / 2 (complex for strong barriers)."""
        disc = 1.0 - 8.0 * self.u0 / self.alpha ** 2
        r = math.sqrt(disc) if disc >= 0 else 1j * math.sqrt(-disc)
        return 0.5 * (-1.0 + r)

    @property
    def phase_length(self) -> float:
        """L = b - ln 2 / alpha, the effective well width."""
        return self.b - math.log(2.0) / self.alpha

    def _map_energies(self, f):
        return dataclasses.replace(self, u0=f(self.u0))


def evaluate_potential(spec: PotentialSpec, x):
    """V(x); x < 0 returns INFINITE.  Scalar or array."""
    scalar = np.ndim(x) == 0
    xa = np.asarray(x, dtype=float)
    if isinstance(spec, PoschlTeller):
        with np.errstate(over="ignore"):
            v = spec.u0 / np.cosh(spec.alpha * (xa - spec.b)) ** 2
    else:
        outer = spec.v1 if isinstance(spec, ModifiedSquareBarrier) else 0.0
        v = np.where(xa < spec.a, 0.0,
                     np.where(xa <= spec.b, spec.v0, outer))
    v = np.where(xa < 0, INFINITE, v)
    return float(v) if scalar else v


def pt_turning_points(spec: PoschlTeller, energy: float):
    """Classical turning points of the PT barrier at energy 0 < E < u0.

    The left point is clipped to the wall (0) when V(0) < E.
    """
    if not 0 < energy < spec.u0:
        raise DomainError("turning points need 0 < E < u0")
    half = math.acosh(math.sqrt(spec.u0 / energy)) / spec.alpha
    return max(spec.b - half, 0.0), spec.b + half


def _pt_reference_energy(spec):
    from .resonances import real_resonance_momenta
    k = real_resonance_momenta(spec, 0)[0]
    return 0.5 * k * k


def classify_region(spec: PotentialSpec, x, e_ref=None):
    """'L', 'B' or 'R'.  For PT the L/B boundary is the left turning point
    at e_ref (default: ground-resonance energy)."""
    if x < 0:
        raise DomainError("classify_region needs x >= 0")
    if isinstance(spec, PoschlTeller):
        if e_ref is None:
            e_ref = _pt_reference_energy(spec)
        left, right = pt_turning_points(spec, e_ref)
    else:
        left, right = spec.a, spec.b
    if x < left:
        return "L"
    if x <= right:
        return "B"
    return "R"


def region_edge(spec: PotentialSpec, e_ref=None) -> float:
    """Right end of region L."""
    if isinstance(spec, PoschlTeller):
        if e_ref is None:
            e_ref = _pt_reference_energy(spec)
        return pt_turning_points(spec, e_ref)[0]
    return spec.a


def tail_exponent(spec: PotentialSpec) -> Fraction:
    return spec.gamma


@dataclasses.dataclass(frozen=True)
class BarrierGeometry:
    spec: PotentialSpec

    @property
    def gamma(self) -> Fraction:
        return self.spec.gamma

    def kappa_at(self, p):
        """kappa = sqrt(2 V_top - p^2), continued from real sub-barrier p."""
        k2 = 2.0 * self.spec.barrier_top - p * p
        if isinstance(p, complex) or np.iscomplexobj(p):
            return np.sqrt(k2 + 0j)
        if np.any(np.asarray(k2) <= 0):
            raise DegenerateError("kappa_at: energy at or above barrier top")
        return np.sqrt(k2)

    @property
    def thickness(self) -> float:
        """b - a (square models) or pi / alpha (PT, multiplies kappa)."""
        if isinstance(self.spec, PoschlTeller):
            return math.pi / self.spec.alpha
        return self.spec.b - self.spec.a

    def wkb_exponent_at(self, p):
        return self.kappa_at(p) * self.thickness


def barrier_geometry(spec: PotentialSpec) -> BarrierGeometry:
    return BarrierGeometry(spec)


# ---------------------------------------------------------------------------
# config files: "key = value" lines, '#' comments

_MODELS = {"square", "msquare", "pt"}
_FLOAT_KEYS = {"a", "b", "v0", "v1", "u0", "alpha", "omega_a", "omega_b",
               "omega_c", "hbar", "mass", "width",
               "x", "y", "t_end", "dt", "dx", "x_max", "v_min", "v_max", "p_max"}


def _parse_lines(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in _FLOAT_KEYS:
            try:
                out[key] = float(val)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} is not a number: {val!r}")
        else:
            out[key] = val
        out.setdefault("_lines", {})[key] = lineno
    return out


def spec_from_mapping(cfg: dict) -> PotentialSpec:
    """Build an internal-units spec from a parsed config mapping."""
    model = cfg.get("model")
    if model not in _MODELS:
        raise ConfigError(f"model must be one of {sorted(_MODELS)}, got {model!r}")
    units = UnitsContext(cfg.get("hbar", 1.0), cfg.get("mass", 1.0))

    def need(key):
        if key not in cfg:
            raise ConfigError(f"missing key {key!r} for model {model}")
        return cfg[key]

    def width_or_b(a):
        if "width" in cfg:
            return a + cfg["width"]
        return need("b")

    # raw energies are in caller units; omega values are dimensionless
    try:
        if model == "square":
            a = need("a")
            if "omega_a" in cfg:
                return SquareBarrier.from_omega(cfg["omega_a"], a, width_or_b(a))
            return units.spec_in(SquareBarrier(a, need("b"), need("v0")))
        if model == "msquare":
            v0 = units.energy_in(need("v0"))
            v1 = units.energy_in(need("v1"))
            if "omega_b" in cfg:
                a = cfg["omega_b"] / math.sqrt(2.0 * (v0 - v1))
            else:
                a = need("a")
            return ModifiedSquareBarrier(a, width_or_b(a), v0, v1)
        u0 = units.energy_in(need("u0"))
        if "omega_c" in cfg:
            b = cfg["omega_c"] / math.sqrt(2.0 * u0)
        else:
            b = need("b")
        return PoschlTeller(b, u0, need("alpha"))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(source) -> tuple[PotentialSpec, dict]:
    """Parse a config file path or text; return (spec, raw mapping)."""
    if isinstance(source, Path) or (isinstance(source, str) and "=" not in source):
        text = Path(source).read_text()
    else:
        text = source
    cfg = _parse_lines(text)
    return spec_from_mapping(cfg), cfg
