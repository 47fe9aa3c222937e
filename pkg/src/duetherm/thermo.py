"""Power, heat currents, entropy production and efficiency of the driven engine.

All integrals share one regular kernel,

    K_nu(omega) = omega * J1(omega + nu) * N(omega, nu) / (2 pi m),

paired with chi''(omega)/omega, so nothing singular is ever formed at
omega = 0 or omega = -nu.  The -n harmonic of a real drive gives the same
integral as +n (substitute omega -> -omega), so each pair is evaluated once
and doubled.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .integrate import Breakpoint, dedupe, integrate_line, peak_breakpoints
from .model import EngineParams, Topology, coth, lorentzian, x_coth
from .response import chi2_imag_over_omega, detuning, hybrid_frequency, normal_modes

DEFAULT_PHIS = (0.0, math.pi)
MAP_REL_TOL = 1e-6


class NotEngine(Exception):
    pass


# ---------------------------------------------------------------- drives


@dataclass(frozen=True)
class DriveSpectrum:
    """Fourier coefficients of the two coupling modulations.

    ``coeffs[n - 1] = (g_n^A, g_n^B)`` for n = 1..n_max; g_{-n} is the complex
    conjugate and g_0 = 0.  Squared norms count both +n and -n, so a drive
    meeting norm g^(l) has ``2 * sum_n |g_n^l|^2 = (g^l)^2``.
    """

    fundamental: float
    coeffs: np.ndarray
    norms: tuple[float, float] | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        c = c.astype(complex if np.iscomplexobj(c) else float)
        if c.ndim != 2 or c.shape[1] != 2:
            raise ValueError(f"coeffs must have shape (n_max, 2), got {c.shape}")
        if not self.fundamental > 0:
            raise ValueError("fundamental must be > 0")
        object.__setattr__(self, "coeffs", c)
        if self.norms is not None:
            have = self.norm_squared()
            for l, target in enumerate(self.norms):
                if abs(have[l] - target**2) > 1e-12 * max(1.0, target**2):
                    raise ValueError(f"oscillator {'AB'[l]}: squared norm {have[l]} != {target**2}")

    @property
    def n_max(self) -> int:
        return self.coeffs.shape[0]

    def norm_squared(self) -> np.ndarray:
        return 2.0 * np.sum(np.abs(self.coeffs) ** 2, axis=0)

    def harmonics(self) -> np.ndarray:
        """1-based indices of harmonics carrying any weight."""
        return np.nonzero(np.any(self.coeffs != 0, axis=1))[0] + 1

    def frequencies(self) -> np.ndarray:
        return self.fundamental * np.arange(1, self.n_max + 1)

    @classmethod
    def monochromatic(cls, Omega: float, phi: float = 0.0, norms=(1 / math.sqrt(2), 1 / math.sqrt(2))):
        """g_{+-1}^A = g^A/sqrt2 and g_{+-1}^B = g^B e^{-+i phi}/sqrt2."""
        ga, gb = norms
        gb_n = gb / math.sqrt(2) * np.exp(-1j * phi)
        if abs(gb_n.imag) < 1e-15 * max(gb, 1e-300):
            gb_n = gb_n.real
        c = np.array([[ga / math.sqrt(2), gb_n]])
        return cls(Omega, c, tuple(norms))

    @classmethod
    def from_tilde(cls, Omega: float, g_tilde: np.ndarray, norms: tuple[float, float]):
        """Project unconstrained coefficients onto the two norm spheres."""
        return cls(Omega, project_norms(g_tilde, norms), tuple(norms))


def project_norms(g_tilde: np.ndarray, norms) -> np.ndarray:
    g_tilde = np.asarray(g_tilde, dtype=float)
    out = np.zeros_like(g_tilde)
    for l in (0, 1):
        col = g_tilde[:, l]
        size = np.linalg.norm(col)
        if norms[l] > 0 and size > 0:
            out[:, l] = norms[l] / math.sqrt(2) * col / size
    return out


# ---------------------------------------------------------------- kernels


def drive_kernel(p: EngineParams, omega, nu: float, omega1=None):
    """omega * J1(omega + nu) * N(omega, nu) / (2 pi m); regular everywhere.

    ``omega1`` may be an array of filter centres, giving shape
    ``omega1.shape + omega.shape``.
    """
    omega = np.asarray(omega, dtype=float)
    w1 = p.omega1 if omega1 is None else np.asarray(omega1, dtype=float)[..., None]
    u = omega + nu
    u2 = u * u
    j_over_u = p.d1 * p.mass * p.gamma1 / ((u2 - w1 * w1) ** 2 + p.gamma1**2 * u2)
    hot = omega * x_coth(u, p.t1)
    cold = u * x_coth(omega, p.t2)
    return j_over_u * (hot - cold) / (2.0 * math.pi * p.mass)


def _reduced_form(p: EngineParams, omega, g):
    """g^dagger chi''(omega) g / omega for one harmonic's coefficient pair."""
    aa, ab, bb = chi2_imag_over_omega(p, omega)
    ga, gb = g
    return abs(ga) ** 2 * aa + abs(gb) ** 2 * bb + 2.0 * (np.conj(ga) * gb).real * ab


def _harmonic_integral(p, drive, n, weight, rel_tol, abs_tol):
    nu = n * drive.fundamental
    g = drive.coeffs[n - 1]

    def f(w):
        return weight(w, nu) * drive_kernel(p, w, nu) * _reduced_form(p, w, g)

    res = integrate_line(f, peak_breakpoints(p, nu), rel_tol, abs_tol, context=f"harmonic n={n}")
    return 2.0 * res.value


def _sum_harmonics(p, drive, weight, rel_tol, abs_tol):
    return float(sum(_harmonic_integral(p, drive, int(n), weight, rel_tol, abs_tol) for n in drive.harmonics()))


def _w_power(w, nu):
    return -nu


def _w_heat1(w, nu):
    return w + nu


def _w_heat2(w, nu):
    return -w


def average_power(p: EngineParams, drive: DriveSpectrum, rel_tol=1e-8, abs_tol=1e-12) -> float:
    """Cycle-averaged power; negative when work is extracted."""
    return _sum_harmonics(p, drive, _w_power, rel_tol, abs_tol)


def heat_currents(p: EngineParams, drive: DriveSpectrum, rel_tol=1e-8, abs_tol=1e-12) -> tuple[float, float]:
    """(J1, J2), each from its own integral; positive when heat flows into the oscillators."""
    j1 = _sum_harmonics(p, drive, _w_heat1, rel_tol, abs_tol)
    j2 = _sum_harmonics(p, drive, _w_heat2, rel_tol, abs_tol)
    return j1, j2


@dataclass(frozen=True)
class ThermoReport:
    power: float
    j1: float
    j2: float
    sigma: float
    efficiency: float | None
    eta_ratio: float | None
    not_engine: bool

    @property
    def first_law_residual(self) -> float:
        return self.power + self.j1 + self.j2


def efficiency_of(p: EngineParams, power: float, j1: float) -> tuple[float | None, float | None, bool]:
    if power < 0 and j1 > 0:
        eta = -power / j1
        return eta, eta / p.eta_carnot, False
    return None, None, True


def report(p: EngineParams, drive: DriveSpectrum, rel_tol=1e-8, abs_tol=1e-12) -> ThermoReport:
    power = average_power(p, drive, rel_tol, abs_tol)
    j1, j2 = heat_currents(p, drive, rel_tol, abs_tol)
    sigma = -j1 / p.t1 - j2 / p.t2
    eta, ratio, flag = efficiency_of(p, power, j1)
    return ThermoReport(power, j1, j2, sigma, eta, ratio, flag)


def p_tilde(p: EngineParams, power):
    """Dimensionless power P omega_a^2 / d1."""
    return np.asarray(power) * p.omega_a**2 / p.d1


# ---------------------------------------------------------------- monochromatic


def _eff_reduced(p: EngineParams, omega, phi: float):
    aa, ab, bb = chi2_imag_over_omega(p, omega)
    if p.topology is Topology.INDEPENDENT:
        return aa + bb
    return aa + bb + 2.0 * math.cos(phi) * ab


def power_monochromatic(p: EngineParams, Omega: float, phi: float, rel_tol=1e-8, abs_tol=1e-12) -> float:
    """-Omega/(4 pi m) * integral of J1(w + Omega) N(w, Omega) Im chi_eff(w; phi)."""

    def f(w):
        return drive_kernel(p, w, Omega) * _eff_reduced(p, w, phi)

    res = integrate_line(f, peak_breakpoints(p, Omega), rel_tol, abs_tol, context=f"Omega={Omega}")
    return -0.5 * Omega * res.value


def monochromatic_parts(p: EngineParams, Omega: float, omega1: Sequence[float] | None = None,
                        rel_tol=MAP_REL_TOL, abs_tol=1e-12) -> tuple[np.ndarray, np.ndarray]:
    """(P_diag, P_cross) with P(phi) = P_diag + cos(phi) P_cross, for every filter centre.

    One vector-valued integration covers all entries of ``omega1``.
    """
    w1 = np.atleast_1d(np.asarray(p.omega1 if omega1 is None else omega1, dtype=float))
    bps = [Breakpoint(0.0, min(p.t1, p.t2))]
    for z in normal_modes(p):
        bps.append(Breakpoint(float(z.real), abs(float(z.imag))))
    for c in w1:
        bps += [Breakpoint(c - Omega, p.gamma1 / 2), Breakpoint(-c - Omega, p.gamma1 / 2)]
    bps = dedupe(bps)
    k = len(w1)

    def f(w):
        aa, ab, bb = chi2_imag_over_omega(p, w)
        kern = drive_kernel(p, w, Omega, omega1=w1)
        return np.concatenate([kern * (aa + bb), kern * (2.0 * ab)], axis=0)

    res = integrate_line(f, bps, rel_tol, abs_tol, context=f"Omega={Omega}")
    vals = -0.5 * Omega * np.asarray(res.value)
    return vals[:k], vals[k:]


# ---------------------------------------------------------------- closed forms


def _filtered_factor(p: EngineParams, omega: float, Omega, w1):
    """J1(omega + Omega) * N(omega, Omega), regular where omega + Omega -> 0."""
    u = omega + Omega
    u2 = u * u
    j_over_u = p.d1 * p.mass * p.gamma1 / ((u2 - w1 * w1) ** 2 + p.gamma1**2 * u2)
    return j_over_u * (x_coth(u, p.t1) - u * coth(omega / (2.0 * p.t2)))


def power_weak_limit(p: EngineParams, Omega, omega1=None):
    """Phase-independent gamma2 -> 0 limit: two Lorentzian-filtered resonances per oscillator."""
    Omega = np.asarray(Omega, dtype=float)
    w1 = p.omega1 if omega1 is None else np.asarray(omega1, dtype=float)
    total = 0.0
    for wl in (p.omega_a, p.omega_b):
        inner = 0.0
        for s in (1.0, -1.0):
            inner = inner + s * _filtered_factor(p, s * wl, Omega, w1)
        total = total + inner / wl
    return -Omega / (8.0 * p.mass) * total


def power_strong_pi(p: EngineParams, Omega, omega1=None):
    """gamma2 -> infinity, anti-phase drive: locked mode at the hybrid frequency plus slow mode."""
    Omega = np.asarray(Omega, dtype=float)
    w1 = p.omega1 if omega1 is None else np.asarray(omega1, dtype=float)
    wa2, wb2 = p.omega_a**2, p.omega_b**2
    wbar = hybrid_frequency(p)
    slow = p.t2 * (wb2 - wa2) ** 2 / (wbar * wa2 * wb2) * lorentzian(Omega, p.d1, p.gamma1, w1, p.mass)
    locked = 0.0
    for s in (1.0, -1.0):
        locked = locked + s * _filtered_factor(p, s * wbar, Omega, w1)
    return Omega / (4.0 * p.mass * wbar) * (slow - locked)


def power_strong_zero(p: EngineParams, Omega, omega1=None):
    """gamma2 -> infinity, in-phase drive (also the independent-topology limit); always >= 0."""
    Omega = np.asarray(Omega, dtype=float)
    w1 = p.omega1 if omega1 is None else np.asarray(omega1, dtype=float)
    j = lorentzian(Omega, p.d1, p.gamma1, w1, p.mass)
    return Omega / (2.0 * p.mass) * p.t2 * j * (1.0 / p.omega_a**2 + 1.0 / p.omega_b**2)


def delta_work_closed(p: EngineParams, omega1_star: float, phi: float) -> float:
    """Strong-damping W2 + W3 - W1 for phi in {0, pi}."""
    wbar = hybrid_frequency(p)
    d4 = detuning(p) ** 4
    j = float(lorentzian(omega1_star, p.d1, p.gamma1, omega1_star, p.mass))
    if math.isclose(math.cos(phi), 1.0, abs_tol=1e-12):
        return 2.0 * math.pi * p.t2 / p.mass * wbar**2 / (wbar**4 - d4) * j
    if math.isclose(math.cos(phi), -1.0, abs_tol=1e-12):
        bracket = coth(wbar / (2.0 * p.t2)) + 2.0 * p.t2 * d4 / (wbar * (wbar**4 - d4))
        return math.pi / (p.mass * wbar) * bracket * j
    raise ValueError("closed-form work combination exists only for phi = 0 or pi")


@dataclass(frozen=True)
class WorkSet:
    w1: float
    w2: float
    w3: float
    delta: float
    delta_closed: float

    def __iter__(self):
        return iter((self.w1, self.w2, self.w3, self.delta))


def works_and_delta(p: EngineParams, omega1_star: float, phi: float, rel_tol=1e-8) -> WorkSet:
    """Average works per cycle at Omega = wbar - w1*, w1*, wbar + w1* with the filter at w1*."""
    wbar = hybrid_frequency(p)
    if not 0 < omega1_star < wbar:
        raise ValueError("omega1_star must lie in (0, wbar)")
    q = p.with_(omega1=omega1_star)
    works = []
    for Omega in (wbar - omega1_star, omega1_star, wbar + omega1_star):
        works.append(2.0 * math.pi / Omega * power_monochromatic(q, Omega, phi, rel_tol))
    w1, w2, w3 = works
    return WorkSet(w1, w2, w3, w2 + w3 - w1, delta_work_closed(q, omega1_star, phi))


# ---------------------------------------------------------------- maps


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over Omega in (0, omega_max] and omega1 in (0, omega1_max]."""

    omega_max: float = 1.2
    omega1_max: float = 2.0
    n_omega: int = 200
    n_omega1: int = 200

    def omegas(self) -> np.ndarray:
        return self.omega_max * np.arange(1, self.n_omega + 1) / self.n_omega

    def omega1s(self) -> np.ndarray:
        return self.omega1_max * np.arange(1, self.n_omega1 + 1) / self.n_omega1


@dataclass
class PowerMap:
    """P-tilde on a grid, rows indexed by Omega and columns by omega1."""

    omegas: np.ndarray
    omega1s: np.ndarray
    diag: np.ndarray
    cross: np.ndarray
    phis: tuple[float, ...]
    p_tilde: np.ndarray = field(init=False)
    phi_star: np.ndarray = field(init=False)

    def __post_init__(self):
        stack = np.stack([self.at(phi) for phi in self.phis])
        best = np.argmin(stack, axis=0)
        self.p_tilde = np.take_along_axis(stack, best[None], 0)[0]
        self.phi_star = np.asarray(self.phis)[best]

    def at(self, phi: float) -> np.ndarray:
        return self.diag + math.cos(phi) * self.cross

    def argmin(self) -> tuple[int, int]:
        return np.unravel_index(int(np.argmin(self.p_tilde)), self.p_tilde.shape)

    def rows(self) -> Iterable[tuple[float, float, float, float]]:
        for i, Om in enumerate(self.omegas):
            for j, w1 in enumerate(self.omega1s):
                yield w1, Om, self.p_tilde[i, j], self.phi_star[i, j]


def _map_column(args):
    p, Omega, w1, chunk, rel_tol = args
    diag, cross = [], []
    for start in range(0, len(w1), chunk):
        d, c = monochromatic_parts(p, Omega, w1[start:start + chunk], rel_tol)
        diag.append(d)
        cross.append(c)
    return np.concatenate(diag), np.concatenate(cross)


def power_map(p: EngineParams, grid: GridSpec = GridSpec(), phis: Sequence[float] = DEFAULT_PHIS,
              workers: int = 1, chunk: int = 25, rel_tol: float = MAP_REL_TOL) -> PowerMap:
    """Monochromatic P-tilde over the grid, minimised (max output) over ``phis``."""
    omegas, w1 = grid.omegas(), grid.omega1s()
    jobs = [(p, float(Om), w1, chunk, rel_tol) for Om in omegas]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            cols = list(pool.map(_map_column, jobs))
    else:
        cols = [_map_column(j) for j in jobs]
    scale = p.omega_a**2 / p.d1
    diag = np.array([c[0] for c in cols]) * scale
    cross = np.array([c[1] for c in cols]) * scale
    if p.topology is Topology.INDEPENDENT:
        cross = np.zeros_like(cross)
    return PowerMap(omegas, w1, diag, cross, tuple(phis))


@dataclass(frozen=True)
class PowerOptimum:
    gamma2: float
    p_tilde_max: float
    omega1_star: float
    omega_star: float
    phi_star: float


def refine_optimum(p: EngineParams, omega1: float, Omega: float, phi: float, step: float) -> tuple[float, float, float]:
    """Local Nelder-Mead polish of a grid optimum; returns (P, omega1, Omega)."""
    from scipy.optimize import minimize

    def obj(x):
        w1, Om = x
        if w1 <= 0 or Om <= 0:
            return 1e3
        return power_monochromatic(p.with_(omega1=float(w1)), float(Om), phi, rel_tol=1e-7)

    x0 = np.array([omega1, Omega])
    simplex = np.array([x0, x0 + [step, 0.0], x0 + [0.0, step]])
    res = minimize(obj, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-5, "fatol": 1e-10, "maxiter": 400})
    best = min((res.fun, *res.x), (obj(x0), *x0))
    return float(best[0]), float(best[1]), float(best[2])


def max_power(p: EngineParams, grid: GridSpec, phis: Sequence[float] = DEFAULT_PHIS,
              refine: bool = True, workers: int = 1) -> PowerOptimum:
    """Maximum output power over (omega1, Omega) and the phase set."""
    pm = power_map(p, grid, phis, workers)
    i, j = pm.argmin()
    P, w1, Om, phi = pm.p_tilde[i, j] * p.d1 / p.omega_a**2, pm.omega1s[j], pm.omegas[i], pm.phi_star[i, j]
    if refine:
        step = min(grid.omega_max / grid.n_omega, grid.omega1_max / grid.n_omega1) / 2
        P, w1, Om = refine_optimum(p, w1, Om, float(phi), step)
    return PowerOptimum(p.gamma2, float(-p_tilde(p, P)), float(w1), float(Om), float(phi))


def max_closed_form(p: EngineParams, which: str, grid: GridSpec = GridSpec(n_omega=400, n_omega1=400)) -> PowerOptimum:
    """Maximise a closed-form limit ('weak' or 'strong_pi') over (omega1, Omega).

    A dense grid is scanned first, then the best cell is polished with Nelder-Mead.
    """
    from scipy.optimize import minimize

    fn = {"weak": power_weak_limit, "strong_pi": power_strong_pi}[which]
    Om = grid.omegas()[:, None]
    w1 = grid.omega1s()[None, :]
    vals = fn(p, Om, w1)
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)

    def obj(x):
        return float(fn(p, x[1], x[0]))

    # local polish inside the grid box, starting from a one-cell simplex
    d1, d0 = grid.omega1_max / grid.n_omega1, grid.omega_max / grid.n_omega
    x0 = np.array([w1[0, j], Om[i, 0]])
    simplex = np.array([x0, x0 + [d1, 0.0], x0 + [0.0, d0]])
    bounds = [(d1, grid.omega1_max), (d0, grid.omega_max)]
    res = minimize(obj, x0, method="Nelder-Mead", bounds=bounds,
                   options={"initial_simplex": simplex, "xatol": 1e-8, "fatol": 1e-13})
    best = min((res.fun, *res.x), (obj(x0), *x0))
    phi = 0.0 if which == "weak" else math.pi
    return PowerOptimum(p.gamma2, float(-p_tilde(p, best[0])), float(best[1]), float(best[2]), phi)
