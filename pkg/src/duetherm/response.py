"""Retarded response of two oscillators dressed by a common (or private) Ohmic bath.

Frequencies are vectorised: every function accepts a scalar or an array of
real omega and broadcasts.  Matrix-valued results carry the 2x2 indices last.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import EngineParams, Topology


class Regime(str, enum.Enum):
    WEAK = "weak"
    STRONG = "strong"


class PoleHit(ArithmeticError):
    pass


def hybrid_frequency(p: EngineParams) -> float:
    return math.sqrt((p.omega_a**2 + p.omega_b**2) / 2.0)


def detuning(p: EngineParams) -> float:
    return math.sqrt((p.omega_a**2 - p.omega_b**2) / 2.0)


def damping_kernel(p: EngineParams, omega, cutoff: float | None = None):
    """gamma2(omega): constant for an infinite cutoff, Drude gamma2/(1 - i omega/omega_c) otherwise."""
    omega = np.asarray(omega, dtype=float)
    if cutoff is None or math.isinf(cutoff):
        return np.full(omega.shape, complex(p.gamma2))
    return p.gamma2 / (1.0 - 1j * omega / cutoff)


def denominator(p: EngineParams, omega, cutoff: float | None = None):
    """D(omega) = (w^2 - wA^2)(w^2 - wB^2) + i w (2w^2 - wA^2 - wB^2) gamma2(w).

    ``omega`` may be complex when ``cutoff`` is infinite (constant kernel).
    """
    omega = np.asarray(omega)
    w2 = omega * omega
    a = w2 - p.omega_a**2
    b = w2 - p.omega_b**2
    if cutoff is None or math.isinf(cutoff):
        g = p.gamma2
    else:
        g = damping_kernel(p, np.real(omega), cutoff)
    return a * b + 1j * omega * (a + b) * g


def chi2_imag(p: EngineParams, omega, cutoff: float | None = None):
    """Imaginary parts (chiAA'', chiAB'', chiBB'') as three arrays.

    Uses the factorised closed forms, so det chi'' vanishes to rounding and
    the entries stay accurate deep in the tails.
    """
    omega = np.asarray(omega, dtype=float)
    g = damping_kernel(p, omega, cutoff)
    w2 = omega * omega
    a = w2 - p.omega_a**2
    b = w2 - p.omega_b**2
    if p.topology is Topology.INDEPENDENT:
        wg = omega * g
        aa = omega * g.real / np.abs(a + 1j * wg) ** 2
        bb = omega * g.real / np.abs(b + 1j * wg) ** 2
        return aa, np.zeros_like(aa), bb
    d2 = np.abs(a * b + 1j * omega * (a + b) * g) ** 2
    if np.any(d2 == 0.0):
        raise PoleHit("|D(omega)| underflowed; gamma2 must be > 0")
    pref = omega * g.real / d2
    return pref * b * b, pref * a * b, pref * a * a


def chi2_imag_over_omega(p: EngineParams, omega, cutoff: float | None = None):
    """chi2''(omega)/omega as (aa, ab, bb); even in omega and finite at omega = 0."""
    omega = np.asarray(omega, dtype=float)
    g = damping_kernel(p, omega, cutoff)
    w2 = omega * omega
    a = w2 - p.omega_a**2
    b = w2 - p.omega_b**2
    if p.topology is Topology.INDEPENDENT:
        wg = omega * g
        aa = g.real / np.abs(a + 1j * wg) ** 2
        bb = g.real / np.abs(b + 1j * wg) ** 2
        return aa, np.zeros_like(aa), bb
    pref = g.real / np.abs(a * b + 1j * omega * (a + b) * g) ** 2
    return pref * b * b, pref * a * b, pref * a * a


def chi2_matrix(p: EngineParams, omega, cutoff: float | None = None):
    """Full complex chi2(omega), shape ``omega.shape + (2, 2)``."""
    omega = np.asarray(omega, dtype=float)
    g = damping_kernel(p, omega, cutoff)
    w2 = omega * omega
    out = np.zeros(omega.shape + (2, 2), dtype=complex)
    if p.topology is Topology.INDEPENDENT:
        out[..., 0, 0] = -1.0 / (w2 - p.omega_a**2 + 1j * omega * g)
        out[..., 1, 1] = -1.0 / (w2 - p.omega_b**2 + 1j * omega * g)
        return out
    d = denominator(p, omega, cutoff)
    if np.any(d == 0):
        raise PoleHit("|D(omega)| underflowed; gamma2 must be > 0")
    out[..., 0, 0] = -(w2 - p.omega_b**2 + 1j * omega * g) / d
    out[..., 1, 1] = -(w2 - p.omega_a**2 + 1j * omega * g) / d
    out[..., 0, 1] = out[..., 1, 0] = 1j * omega * g / d
    return out


@dataclass(frozen=True)
class ResponseMatrix:
    value: np.ndarray
    hybrid_freq: float
    delta: float

    @property
    def imag(self) -> np.ndarray:
        return self.value.imag

    @property
    def real(self) -> np.ndarray:
        return self.value.real


def chi2(p: EngineParams, omega, cutoff: float | None = None) -> ResponseMatrix:
    """chi2(omega) bundled with the hybrid frequency and Delta.

    The imaginary part is replaced by the factorised closed form so it keeps
    its exact rank-one structure.
    """
    value = chi2_matrix(p, omega, cutoff)
    aa, ab, bb = chi2_imag(p, omega, cutoff)
    value.imag = np.stack([np.stack([aa, ab], -1), np.stack([ab, bb], -1)], -2)
    return ResponseMatrix(value, hybrid_frequency(p), detuning(p))


def imag_matrix(aa, ab, bb) -> np.ndarray:
    return np.stack([np.stack([aa, ab], -1), np.stack([ab, bb], -1)], -2)


def finite_eigenvalue(p: EngineParams, omega):
    """Non-zero eigenvalue of chi2''(omega) (equal to its trace)."""
    omega = np.asarray(omega, dtype=float)
    w2 = omega * omega
    a = w2 - p.omega_a**2
    b = w2 - p.omega_b**2
    d2 = np.abs(denominator(p, omega)) ** 2
    return p.gamma2 * omega * (a * a + b * b) / d2


@dataclass(frozen=True)
class NormalModes:
    """Four zeros of D, ordered by descending real then descending imaginary part."""

    zeros: np.ndarray

    def __iter__(self):
        return iter(self.zeros)

    def __getitem__(self, i):
        return self.zeros[i]


def quartic_coefficients(p: EngineParams) -> np.ndarray:
    """Coefficients of D(z), highest power first."""
    s = p.omega_a**2 + p.omega_b**2
    g = p.gamma2
    return np.array([1.0, 2j * g, -s, -1j * g * s, p.omega_a**2 * p.omega_b**2], dtype=complex)


def companion_roots(coeffs) -> np.ndarray:
    """Roots of a polynomial (highest power first) as eigenvalues of its companion matrix."""
    c = np.asarray(coeffs, dtype=complex)
    c = c / c[0]
    n = len(c) - 1
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -c[1:]
    comp[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp)


def _sort_modes(z: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(z))))
    z = np.where(np.abs(z.real) <= 1e-12 * scale, 1j * z.imag, z)
    order = sorted(range(len(z)), key=lambda k: (-z[k].real, -z[k].imag))
    return z[order]


def normal_modes(p: EngineParams) -> NormalModes:
    if p.topology is Topology.INDEPENDENT:
        g = p.gamma2
        roots = []
        for w in (p.omega_a, p.omega_b):
            disc = np.sqrt(complex(4 * w * w - g * g))
            roots += [(-1j * g + disc) / 2, (-1j * g - disc) / 2]
        return NormalModes(_sort_modes(np.array(roots)))
    return NormalModes(_sort_modes(companion_roots(quartic_coefficients(p))))


def strong_mode_widths(p: EngineParams) -> tuple[float, float]:
    """|z1''| and |z2''| of the locked and slow overdamped modes at large gamma2."""
    wbar = hybrid_frequency(p)
    d4 = detuning(p) ** 4
    z1 = d4 / (4 * p.gamma2 * wbar**2)
    z2 = (wbar**4 - d4) / (2 * p.gamma2 * wbar**2)
    return z1, z2


def chi_asymptotic(p: EngineParams, omega, regime: Regime | str):
    """Closed-form chi2''(omega) in the weak or strong damping limit, shape ``(..., 2, 2)``."""
    regime = Regime(regime)
    omega = np.asarray(omega, dtype=float)
    g = p.gamma2
    wbar = hybrid_frequency(p)
    if regime is Regime.WEAK:
        if g > 0.1 * p.omega_b:
            warnings.warn(f"weak-damping form used at gamma2={g} (needs gamma2 << omega_b)", stacklevel=2)
        w2 = omega * omega
        aa = omega * g / ((w2 - p.omega_a**2) ** 2 + w2 * g * g)
        bb = omega * g / ((w2 - p.omega_b**2) ** 2 + w2 * g * g)
        return imag_matrix(aa, np.zeros_like(aa), bb)

    if g < 10 * detuning(p) ** 4 / wbar**3:
        warnings.warn(f"strong-damping form used at gamma2={g} (needs gamma2 >> Delta^4/wbar^3)", stacklevel=2)
    z1, z2 = strong_mode_widths(p)
    wl = {0: p.omega_a, 1: p.omega_b}
    out = np.zeros(omega.shape + (2, 2))
    for l in (0, 1):
        for lp in (0, 1):
            same = l == lp
            s = wl[l] ** 2 + wl[1 - l] ** 2
            pref = (wl[1 - l] ** 2 / wl[l] ** 2) if same else 1.0
            slow = pref * omega / s * z2 / (omega**2 + z2**2)
            locked = sum(z1 / ((omega + sgn * math.sqrt(s / 2)) ** 2 + z1**2) for sgn in (1.0, -1.0))
            sign = 1.0 if same else -1.0
            out[..., l, lp] = slow + sign * omega / (2 * s) * locked
    return out


def chi_eff(p: EngineParams, omega, phi: float):
    """Effective monochromatic response chiAA + chiBB + 2 cos(phi) chiAB (complex)."""
    chi = chi2_matrix(p, omega)
    if p.topology is Topology.INDEPENDENT:
        return chi[..., 0, 0] + chi[..., 1, 1]
    return chi[..., 0, 0] + chi[..., 1, 1] + 2.0 * math.cos(phi) * chi[..., 0, 1]


def chi_eff_imag(p: EngineParams, omega, phi: float):
    """Im chi_eff from the factorised forms (no cancellation at the locked peak)."""
    aa, ab, bb = chi2_imag(p, omega)
    if p.topology is Topology.INDEPENDENT:
        return aa + bb
    return aa + bb + 2.0 * math.cos(phi) * ab
