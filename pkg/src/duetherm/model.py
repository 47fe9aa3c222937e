"""Physical parameters, bath spectral densities and the thermal factor.

Units: omega_a = m = hbar = k_B = 1.  Powers are reported as P * omega_a**2 / d1
and entropy rates as sigma / omega_a, so with the defaults below every number
is directly the dimensionless quantity plotted for the engine.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

RESONANCE_TOL = 1e-9
DEFAULT_CUTOFF = 1e3
CUTOFF_FACTOR = 100.0
_COTH_SERIES_BELOW = 1e-3


class Topology(str, enum.Enum):
    JOINT = "joint"
    INDEPENDENT = "independent"


class ParamError(ValueError):
    """Raised when a parameter record violates one or more invariants.

    ``issues`` holds one ``(kind, field, message)`` tuple per violation, where
    kind is one of ``Resonant``, ``NonPositive``, ``Cutoff``, ``Missing``,
    ``UnknownKey`` or ``BadValue``.
    """

    def __init__(self, issues: list[tuple[str, str, str]]):
        self.issues = issues
        super().__init__("; ".join(f"{kind}({name}): {msg}" for kind, name, msg in issues))

    def to_json(self) -> dict:
        return {
            "error": "ParamError",
            "issues": [{"kind": k, "field": f, "message": m} for k, f, m in self.issues],
        }


@dataclass(frozen=True)
class EngineParams:
    omega_a: float = 1.0
    omega_b: float = 0.6
    mass: float = 1.0
    gamma2: float = 0.1
    omega_c: float = DEFAULT_CUTOFF
    t1: float = 0.6
    t2: float = 0.4
    d1: float = 1.0
    gamma1: float = 0.01
    omega1: float = 0.8
    topology: Topology = Topology.JOINT

    @property
    def eta_carnot(self) -> float:
        return 1.0 - self.t2 / self.t1

    def with_(self, **changes: Any) -> "EngineParams":
        """Copy with fields replaced; the result is re-validated.

        The cutoff is raised to the admissible minimum when a new ``gamma2``
        would otherwise violate it and ``omega_c`` was not given explicitly.
        """
        rec = {**self.to_record(), **changes}
        if "omega_c" not in changes and math.isfinite(rec["omega_c"]):
            rec["omega_c"] = max(rec["omega_c"], auto_cutoff(rec["omega_a"], rec["gamma2"]))
        return validate_params(rec)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["topology"] = self.topology.value
        return rec


# keys accepted from a JSON configuration document
CONFIG_KEYS = ("omega_b", "gamma2", "omega_c", "t1", "t2", "d1", "gamma1", "omega1", "topology")
_POSITIVE = ("omega_a", "omega_b", "mass", "gamma2", "omega_c", "t1", "t2", "d1", "gamma1", "omega1")


def auto_cutoff(omega_a: float, gamma2: float) -> float:
    """Smallest admissible Drude cutoff, never below the 1e3 default."""
    return max(DEFAULT_CUTOFF, CUTOFF_FACTOR * max(omega_a, gamma2))


def validate_params(raw: Mapping[str, Any], fill_defaults: bool = True) -> EngineParams:
    """Build an :class:`EngineParams` from a loose record, collecting every violation.

    Missing keys take the defaults of :class:`EngineParams`; a missing
    ``omega_c`` is resolved to :func:`auto_cutoff`.  Raises :class:`ParamError`
    listing all problems at once.
    """
    issues: list[tuple[str, str, str]] = []
    known = {f for f in EngineParams.__dataclass_fields__}
    for key in raw:
        if key not in known:
            issues.append(("UnknownKey", key, "not a recognised parameter"))

    defaults = EngineParams()
    values: dict[str, Any] = {}
    for name in known:
        if name in raw:
            values[name] = raw[name]
        elif fill_defaults:
            values[name] = getattr(defaults, name)
        else:
            issues.append(("Missing", name, "required key absent"))
    if issues and not fill_defaults:
        raise ParamError(issues)

    try:
        values["topology"] = Topology(str(getattr(values["topology"], "value", values["topology"])).lower())
    except ValueError:
        issues.append(("BadValue", "topology", "must be 'joint' or 'independent'"))
        values["topology"] = Topology.JOINT

    for name in _POSITIVE:
        if name == "omega_c" and "omega_c" not in raw:
            continue
        try:
            values[name] = float(values[name])
        except (TypeError, ValueError):
            issues.append(("BadValue", name, f"not a number: {values[name]!r}"))
            values[name] = float("nan")
            continue
        if not values[name] > 0:
            issues.append(("NonPositive", name, f"must be > 0, got {values[name]}"))

    if "omega_c" not in raw:
        ga = values["gamma2"] if isinstance(values["gamma2"], float) else 0.0
        values["omega_c"] = auto_cutoff(values["omega_a"], max(ga, 0.0))

    wa, wb = values["omega_a"], values["omega_b"]
    if abs(wa - wb) <= RESONANCE_TOL:
        issues.append(("Resonant", "omega_b", "omega_a == omega_b has no periodic steady state"))
    elif wb > wa:
        issues.append(("BadValue", "omega_b", "must satisfy omega_b < omega_a"))

    wc = values["omega_c"]
    if math.isfinite(wc) and wc > 0 and values["gamma2"] > 0:
        needed = CUTOFF_FACTOR * max(wa, values["gamma2"])
        if wc < needed * (1 - 1e-12):
            issues.append(("Cutoff", "omega_c", f"must be >= {needed:g} (100*max(omega_a, gamma2))"))

    if issues:
        raise ParamError(issues)
    return EngineParams(**values)


def load_config(path: str | Path) -> EngineParams:
    """Read a JSON configuration document.

    An empty document is rejected with every configuration key reported as
    missing; a partial one is completed with defaults.
    """
    text = Path(path).read_text()
    if not text.strip():
        raw: dict = {}
    else:
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ParamError([("BadValue", "<root>", "configuration must be a JSON object")])
    if not raw:
        raise ParamError([("Missing", k, "required key absent") for k in CONFIG_KEYS])
    params_raw = {k: v for k, v in raw.items() if k in CONFIG_KEYS}
    extra = [k for k in raw if k not in CONFIG_KEYS and not k.startswith("_") and k not in RUN_KEYS]
    if extra:
        raise ParamError([("UnknownKey", k, "not a recognised configuration key") for k in extra])
    return validate_params(params_raw)


# non-physical keys the CLI reads from the same document
RUN_KEYS = (
    "grid", "phis", "gamma2_sweep", "omega_b_sweep", "n_max", "fundamental", "ladder_size",
    "seeds", "iterations", "t2_sweep", "omega1_star", "omega_grid", "norms",
)


class SpectralKind(str, enum.Enum):
    OHMIC_DRUDE = "ohmic_drude"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class SpectralDensity:
    """Odd-extended bath spectral density J(omega).

    ``OHMIC_DRUDE`` uses ``gamma`` and ``cutoff`` (``inf`` for the pure Ohmic
    kernel); ``LORENTZIAN`` uses ``amplitude``, ``gamma`` and ``center``.
    """

    kind: SpectralKind
    gamma: float
    cutoff: float = math.inf
    amplitude: float = 1.0
    center: float = 1.0
    mass: float = 1.0

    def __call__(self, omega):
        return spectral_density(self, omega)

    @classmethod
    def static_bath(cls, p: EngineParams, cutoff: float | None = None) -> "SpectralDensity":
        return cls(SpectralKind.OHMIC_DRUDE, p.gamma2, p.omega_c if cutoff is None else cutoff, mass=p.mass)

    @classmethod
    def driven_bath(cls, p: EngineParams) -> "SpectralDensity":
        return cls(SpectralKind.LORENTZIAN, p.gamma1, amplitude=p.d1, center=p.omega1, mass=p.mass)


def ohmic_drude(omega, gamma2: float, omega_c: float = math.inf, mass: float = 1.0):
    omega = np.asarray(omega, dtype=float)
    if math.isinf(omega_c):
        return mass * gamma2 * omega
    return mass * gamma2 * omega / (1.0 + (omega / omega_c) ** 2)


def lorentzian(omega, d1: float, gamma1: float, omega1: float, mass: float = 1.0):
    omega = np.asarray(omega, dtype=float)
    w2 = omega * omega
    return d1 * mass * gamma1 * omega / ((w2 - omega1 * omega1) ** 2 + gamma1 * gamma1 * w2)


def spectral_density(sd: SpectralDensity, omega):
    if sd.kind is SpectralKind.OHMIC_DRUDE:
        return ohmic_drude(omega, sd.gamma, sd.cutoff, sd.mass)
    return lorentzian(omega, sd.amplitude, sd.gamma, sd.center, sd.mass)


def coth(x):
    """Hyperbolic cotangent, using 1/x + x/3 - x**3/45 for |x| < 1e-3."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _COTH_SERIES_BELOW
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        big = 1.0 / np.tanh(np.where(small, 1.0, x))
        xs = np.where(small, x, 1.0)
        series = 1.0 / xs + xs / 3.0 - xs**3 / 45.0
    out = np.where(small, series, big)
    return out if out.ndim else float(out)


def x_coth(x, temperature: float):
    """x * coth(x / 2T), finite (= 2T) at x = 0."""
    x = np.asarray(x, dtype=float)
    u = x / (2.0 * temperature)
    small = np.abs(u) < _COTH_SERIES_BELOW
    us = np.where(small, u, 1.0)
    series = 2.0 * temperature * (1.0 + us * us / 3.0 - us**4 / 45.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = x / np.tanh(np.where(small, 1.0, u))
    out = np.where(small, series, big)
    return out if out.ndim else float(out)


def thermal_factor(omega, shift, t1: float, t2: float):
    """N(omega, shift) = coth((omega + shift)/2T1) - coth(omega/2T2).

    Diverges like -2 T2/omega at omega -> 0 (and like 2 T1/(omega + shift) at
    omega -> -shift); callers must multiply by integrands vanishing there.
    """
    omega = np.asarray(omega, dtype=float)
    return coth((omega + shift) / (2.0 * t1)) - coth(omega / (2.0 * t2))


def to_json_record(p: EngineParams) -> dict:
    rec = p.to_record()
    if math.isinf(rec["omega_c"]):
        rec["omega_c"] = "inf"
    return rec
