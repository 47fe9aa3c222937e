"""Gaussian steady state of the two oscillators under the static bath and its entanglement.

Position and momentum correlators are fluctuation-dissipation integrals of
chi2'' with the finite-cutoff Drude kernel.  For the joint topology the three
response entries are integrated through the combinations

    S = |D|^-2 Re g (a + b)^2,  Dm = |D|^-2 Re g (a - b)^2,  Q = |D|^-2 Re g (b^2 - a^2)

(``a = w^2 - wA^2``, ``b = w^2 - wB^2``), which keep det of the position and
momentum blocks free of cancellation: det = (S Dm - Q^2) / 4.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from .integrate import Breakpoint, dedupe, integrate_line
from .model import EngineParams, Topology, coth, x_coth
from .response import damping_kernel, detuning, hybrid_frequency, normal_modes

NU_BOUNDARY = 0.5
DISCRIMINANT_TOL = 1e-10


class NonPhysical(ArithmeticError):
    pass


class NoRoot(ValueError):
    pass


class NonPositiveWork(ValueError):
    pass


class CriticalMode(str, enum.Enum):
    EXACT = "exact"
    STRONG_LIMIT = "strong_limit"


@dataclass(frozen=True)
class GaussianState:
    """Covariance in the ordering (xA, pA, xB, pB); x-p entries are zero."""

    cov: np.ndarray
    cutoff: float
    nu_tilde: float | None = None
    log_negativity: float | None = None
    det_x: float | None = None
    det_p: float | None = None

    @property
    def alpha(self) -> np.ndarray:
        return self.cov[:2, :2]

    @property
    def beta(self) -> np.ndarray:
        return self.cov[2:, 2:]

    @property
    def gamma(self) -> np.ndarray:
        return self.cov[:2, 2:]


def _breakpoints(p: EngineParams, cutoff: float) -> list[Breakpoint]:
    bps = [Breakpoint(0.0, p.t2)]
    for z in normal_modes(p):
        bps.append(Breakpoint(float(z.real), abs(float(z.imag))))
    for s in (1.0, -1.0):
        bps.append(Breakpoint(2 * s * p.gamma2, p.gamma2))
        if math.isfinite(cutoff):
            bps.append(Breakpoint(s * cutoff, cutoff / 2))
    return dedupe(bps)


def _parts(p: EngineParams, omega: np.ndarray, cutoff: float) -> np.ndarray:
    """Three response combinations divided by omega, shape (3, n)."""
    g = damping_kernel(p, omega, cutoff)
    w2 = omega * omega
    a = w2 - p.omega_a**2
    b = w2 - p.omega_b**2
    if p.topology is Topology.INDEPENDENT:
        wg = omega * g
        aa = g.real / np.abs(a + 1j * wg) ** 2
        bb = g.real / np.abs(b + 1j * wg) ** 2
        return np.stack([aa, np.zeros_like(aa), bb])
    pref = g.real / np.abs(a * b + 1j * omega * (a + b) * g) ** 2
    return np.stack([pref * (a + b) ** 2, np.full_like(omega, (p.omega_b**2 - p.omega_a**2) ** 2) * pref,
                     pref * (b * b - a * a)])


def _entries(p: EngineParams, parts: np.ndarray) -> tuple[np.ndarray, float]:
    """(AA, AB, BB) and the 2x2 determinant from integrated parts."""
    if p.topology is Topology.INDEPENDENT:
        aa, ab, bb = parts
        return np.array([aa, ab, bb]), aa * bb - ab * ab
    s, d, q = parts
    ent = np.array([(s + d) / 4 + q / 2, (s - d) / 4, (s + d) / 4 - q / 2])
    return ent, (s * d - q * q) / 4


def covariance(p: EngineParams, cutoff: float | None = None, rel_tol: float = 1e-10,
               abs_tol: float = 1e-12) -> GaussianState:
    """Steady-state covariance at temperature ``p.t2`` using the Drude cutoff ``p.omega_c``.

    The momentum Q combination is a near-cancelling integral that only enters
    det as Q^2, hence the absolute floor.
    """
    wc = p.omega_c if cutoff is None else cutoff
    if not math.isfinite(wc):
        raise ValueError("momentum correlators need a finite cutoff")
    m, t = p.mass, p.t2

    def f(w):
        base = _parts(p, w, wc) * x_coth(w, t)
        return np.concatenate([base / (2 * math.pi * m), m * w * w * base / (2 * math.pi)])

    res = integrate_line(f, _breakpoints(p, wc), rel_tol, abs_tol, context=f"covariance T2={t}")
    vals = np.asarray(res.value)
    (xaa, xab, xbb), det_x = _entries(p, vals[:3])
    (paa, pab, pbb), det_p = _entries(p, vals[3:])
    cov = np.zeros((4, 4))
    cov[0, 0], cov[1, 1], cov[2, 2], cov[3, 3] = xaa, paa, xbb, pbb
    cov[0, 2] = cov[2, 0] = xab
    cov[1, 3] = cov[3, 1] = pab
    return GaussianState(cov, wc, det_x=float(det_x), det_p=float(det_p))


def symplectic_nu(state: GaussianState) -> tuple[float, float]:
    """(nu_tilde, E_n) of the partial transpose; E_n uses the natural log.

    2 nu^2 = Delta - sqrt(Delta^2 - 4 det Sigma) is evaluated as
    4 det Sigma / (Delta + sqrt(...)) to avoid the subtraction.
    """
    c = state.cov
    det_a = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
    det_b = c[2, 2] * c[3, 3] - c[2, 3] * c[3, 2]
    det_g = c[0, 2] * c[1, 3] - c[0, 3] * c[1, 2]
    if state.det_x is not None and state.det_p is not None:
        det_sigma = state.det_x * state.det_p
    else:
        det_sigma = float(np.linalg.det(c))
    delta = det_a + det_b - 2.0 * det_g
    disc = delta * delta - 4.0 * det_sigma
    if disc < -DISCRIMINANT_TOL * max(1.0, delta * delta):
        raise NonPhysical(f"discriminant {disc:.3e} < 0")
    if abs(disc) <= 8 * sys.float_info.epsilon * delta * delta:
        # rounding noise of a degenerate spectrum; its sqrt would dominate nu
        disc = 0.0
    root = math.sqrt(max(disc, 0.0))
    if delta + root <= 0 or det_sigma <= 0:
        raise NonPhysical(f"covariance not positive (det={det_sigma:.3e}, Delta={delta:.3e})")
    nu = math.sqrt(2.0 * det_sigma / (delta + root))
    return nu, log_negativity(nu)


def log_negativity(nu: float) -> float:
    return max(0.0, -math.log(2.0 * nu))


def gaussian_state(p: EngineParams, cutoff: float | None = None) -> GaussianState:
    """Covariance with nu_tilde and E_n filled in."""
    st = covariance(p, cutoff)
    nu, en = symplectic_nu(st)
    return replace(st, nu_tilde=nu, log_negativity=en)


def nu_infinite_cutoff(p: EngineParams, rel_tol: float = 1e-10, abs_tol: float = 1e-14) -> float:
    """Limit of nu_tilde as omega_c -> inf (joint topology).

    The momentum block grows as L u u^T + F with L ~ log omega_c and
    u = (1, 1), so 2 nu^2 -> 2 det X (u^T adj F u) / (u^T X u), and both
    quadratic forms in u are the (a - b)^2 combination, which converges
    without a cutoff.  Finite-cutoff values approach this as 1/log omega_c.
    """
    if p.topology is Topology.INDEPENDENT:
        raise ValueError("separate baths: the momentum variance itself diverges with the cutoff")
    m, t = p.mass, p.t2

    def f(w):
        s, d, q = _parts(p, w, math.inf) * x_coth(w, t)
        return np.stack([s / (2 * math.pi * m), d / (2 * math.pi * m), q / (2 * math.pi * m),
                         m * w * w * d / (2 * math.pi)])

    res = integrate_line(f, _breakpoints(p, math.inf), rel_tol, abs_tol, context="infinite-cutoff limit")
    s, d, q, d_p = np.asarray(res.value)
    det_x = (s * d - q * q) / 4
    return math.sqrt(det_x * d_p / d)


def nu_strong_closed(p: EngineParams) -> float:
    """nu_tilde of the locked state in the ultra-strong damping limit."""
    wbar = hybrid_frequency(p)
    d4 = detuning(p) ** 4
    t = p.t2
    c = coth(wbar / (2 * t))
    gap = wbar**4 - d4
    nu2 = wbar**3 * t * c * c / (2 * gap) / (c + 2 * t * d4 / (wbar * gap))
    return math.sqrt(nu2)


def nu_from_works(delta_w_0: float, delta_w_pi: float, t2: float, hybrid: float) -> float:
    """nu_tilde^2 from the two work combinations of the phase-locked engine."""
    if not (delta_w_0 > 0 and delta_w_pi > 0):
        raise NonPositiveWork(f"both work combinations must be > 0 (got {delta_w_0}, {delta_w_pi})")
    return coth(hybrid / (2 * t2)) ** 2 / 4 * delta_w_0 / delta_w_pi


def nu_at(p: EngineParams, mode: CriticalMode | str = CriticalMode.EXACT) -> float:
    if CriticalMode(mode) is CriticalMode.STRONG_LIMIT:
        return nu_strong_closed(p)
    return symplectic_nu(covariance(p))[0]


def critical_temperature(p: EngineParams, mode: CriticalMode | str = CriticalMode.EXACT,
                         t_lo: float = 1e-3, t_hi: float | None = None, xtol: float = 1e-6) -> float:
    """Temperature T2 at which nu_tilde crosses 1/2, by bisection on (t_lo, 2 omega_a].

    Raises NoRoot when the state is separable already at ``t_lo``; returns
    ``t_hi`` itself if it is still entangled there.
    """
    mode = CriticalMode(mode)
    t_hi = 2.0 * p.omega_a if t_hi is None else t_hi

    def nu(t):
        return nu_at(p.with_(t2=t), mode)

    if nu(t_lo) >= NU_BOUNDARY:
        raise NoRoot(f"nu_tilde >= 1/2 already at T2={t_lo}")
    if nu(t_hi) < NU_BOUNDARY:
        return t_hi
    lo, hi = t_lo, t_hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if nu(mid) < NU_BOUNDARY:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
