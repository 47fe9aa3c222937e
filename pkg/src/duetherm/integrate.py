"""Breakpoint-driven adaptive Gauss-Kronrod quadrature over the whole real line.

The integrands met in this package are rational functions times coth factors
with a handful of very sharp peaks (a narrow Lorentzian filter, nearly
undamped normal modes).  A globally adaptive sampler would step right over a
peak of width 1e-6, so panels are seeded around every known peak and then
bisected until the Kronrod error estimate is small enough.  The two
semi-infinite tails are mapped onto [0, 1) with omega = R + L t / (1 - t^2).

Integrands may be vector valued: ``f(x)`` with ``x`` of shape ``(n,)`` may
return shape ``(n,)`` or ``(k, n)``; every component must then meet the
tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import EngineParams

# 15-point Kronrod abscissae/weights and the embedded 7-point Gauss weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps
_EDGE_MULTIPLES = (1.0, 5.0, 25.0)

DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-12
MAX_PANELS = 100_000


# running totals for this process, reported in run manifests
_STATS = {"integrals": 0, "panels": 0, "evaluations": 0}


def integration_stats() -> dict:
    return dict(_STATS)


def reset_stats() -> None:
    for k in _STATS:
        _STATS[k] = 0


class NoConvergence(RuntimeError):
    """Panel budget exhausted; usually a peak the breakpoints did not announce."""

    def __init__(self, message: str, panels: int = 0, context: str = ""):
        self.panels = panels
        self.context = context
        super().__init__(message if not context else f"{message} [{context}]")


@dataclass(frozen=True)
class Breakpoint:
    center: float
    half_width: float

    def __post_init__(self):
        if not (math.isfinite(self.center) and math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"bad breakpoint {self}")


@dataclass
class Integrand:
    func: Callable[[np.ndarray], np.ndarray]
    breakpoints: list[Breakpoint] = field(default_factory=list)


@dataclass(frozen=True)
class QuadResult:
    value: float | np.ndarray
    error: float | np.ndarray
    panels: int
    evaluations: int

    def __iter__(self):
        # allows ``value, err = integrate_line(...)``
        return iter((self.value, self.error))


def dedupe(points: Iterable[Breakpoint]) -> list[Breakpoint]:
    """Drop a breakpoint when a narrower one sits within its (narrower) half-width."""
    kept: list[Breakpoint] = []
    for bp in sorted(points, key=lambda b: (b.half_width, b.center)):
        if all(abs(bp.center - k.center) > min(bp.half_width, k.half_width) for k in kept):
            kept.append(bp)
    return sorted(kept, key=lambda b: b.center)


def peak_breakpoints(params: EngineParams, shift: float = 0.0) -> list[Breakpoint]:
    """Known peaks of integrands of the form J1(omega + shift) * N * chi''(omega)."""
    from .response import normal_modes

    pts = [
        Breakpoint(params.omega1 - shift, params.gamma1 / 2),
        Breakpoint(-params.omega1 - shift, params.gamma1 / 2),
        Breakpoint(0.0, min(params.t1, params.t2)),
    ]
    for z in normal_modes(params):
        pts.append(Breakpoint(float(z.real), abs(float(z.imag))))
    return dedupe(pts)


def _panel_edges(breakpoints: Sequence[Breakpoint]) -> np.ndarray:
    if not breakpoints:
        return np.array([-1.0, 0.0, 1.0])
    edges = []
    for bp in breakpoints:
        edges.append(bp.center)
        for k in _EDGE_MULTIPLES:
            edges += [bp.center - k * bp.half_width, bp.center + k * bp.half_width]
    edges = np.unique(np.asarray(edges))
    scale = max(1.0, float(np.max(np.abs(edges))))
    keep = np.concatenate([[True], np.diff(edges) > 1e-14 * scale])
    return edges[keep]


class _Panels:
    """Flat arrays describing panels in their own local variable.

    kind 0: omega itself; kind 1: right tail omega = hi + L t/(1-t^2);
    kind 2: left tail omega = lo - L t/(1-t^2); t in [0, 1).
    """

    def __init__(self, lo_edge: float, hi_edge: float, tail_scale: float):
        self.lo_edge = lo_edge
        self.hi_edge = hi_edge
        self.L = tail_scale

    def nodes(self, kind, a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        t = mid[:, None] + half[:, None] * NODES[None, :]
        x = np.empty_like(t)
        jac = np.ones_like(t)
        line = kind == 0
        x[line] = t[line]
        tails = ~line
        if np.any(tails):
            tt = t[tails]
            den = 1.0 - tt * tt
            off = self.L * tt / den
            jt = self.L * (1.0 + tt * tt) / (den * den)
            sign = np.where(kind[tails] == 1, 1.0, -1.0)[:, None]
            base = np.where(kind[tails] == 1, self.hi_edge, self.lo_edge)[:, None]
            x[tails] = base + sign * off
            jac[tails] = jt
        return x, jac, half


def integrate_line(
    f: Integrand | Callable,
    breakpoints: Sequence[Breakpoint] | None = None,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    max_panels: int = MAX_PANELS,
    tail_scale: float | None = None,
    context: str = "",
) -> QuadResult:
    """Integrate ``f`` over the real line.

    Panels start at every breakpoint and at +-1, 5 and 25 half-widths around
    it; the tails beyond the outermost edge are mapped with
    ``L = 10 * outermost`` unless ``tail_scale`` is given.  A panel is
    bisected while the summed error of any component exceeds
    ``max(abs_tol, rel_tol * |I|)``.
    """
    if isinstance(f, Integrand):
        func = f.func
        bps = list(f.breakpoints) if breakpoints is None else list(breakpoints)
    else:
        func = f
        bps = list(breakpoints or [])

    edges = _panel_edges(bps)
    lo, hi = float(edges[0]), float(edges[-1])
    outer = max(abs(lo), abs(hi), 1e-3)
    L = 10.0 * outer if tail_scale is None else float(tail_scale)
    pan = _Panels(lo, hi, L)

    tail_t = np.array([0.0, 0.5, 0.9, 1.0])
    kind = np.concatenate([np.zeros(len(edges) - 1, int), np.ones(3, int), np.full(3, 2)])
    a = np.concatenate([edges[:-1], tail_t[:-1], tail_t[:-1]])
    b = np.concatenate([edges[1:], tail_t[1:], tail_t[1:]])

    done_val = None
    done_err = None
    evaluations = 0
    n_total = len(a)
    while True:
        x, jac, half = pan.nodes(kind, a, b)
        fx = np.asarray(func(x.ravel()), dtype=float)
        evaluations += x.size
        vector = fx.ndim == 2
        fx = fx.reshape((-1,) + x.shape) if vector else fx.reshape((1,) + x.shape)
        fx = fx * jac[None]
        k_val = (fx @ KRONROD_W) * half[None]
        g_val = (fx @ GAUSS_W) * half[None]
        mean = (fx @ KRONROD_W) / 2.0
        resasc = (np.abs(fx - mean[..., None]) @ KRONROD_W) * half[None]
        resabs = (np.abs(fx) @ KRONROD_W) * half[None]
        err = np.abs(k_val - g_val)
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
        err = np.where((resasc != 0) & (err != 0), scaled, err)
        err = np.maximum(err, 50.0 * _EPS * resabs)
        if not np.all(np.isfinite(k_val)):
            raise NoConvergence("integrand produced non-finite values", n_total, context)

        if done_val is None:
            done_val = np.zeros(k_val.shape[0])
            done_err = np.zeros(k_val.shape[0])
        act_val, act_err = k_val, err
        total = done_val + act_val.sum(axis=1)
        total_err = done_err + act_err.sum(axis=1)
        tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            break

        # split panels whose share of any component's error is too large
        n_active = act_val.shape[1]
        share = np.max(act_err / (tol[:, None] / max(n_active, 1)), axis=0)
        width_ok = (b - a) > 64 * _EPS * np.maximum(np.abs(a), np.abs(b)) + 1e-300
        split = (share > 1.0) & width_ok
        if not np.any(split):
            # remaining error is rounding noise in panels too small to split
            break
        keep = ~split
        done_val = done_val + act_val[:, keep].sum(axis=1)
        done_err = done_err + act_err[:, keep].sum(axis=1)
        m = 0.5 * (a[split] + b[split])
        kind = np.concatenate([kind[split], kind[split]])
        a, b = np.concatenate([a[split], m]), np.concatenate([m, b[split]])
        n_total += int(split.sum())
        if n_total > max_panels:
            raise NoConvergence(f"panel budget {max_panels} exceeded", n_total, context)

    _STATS["integrals"] += 1
    _STATS["panels"] += n_total
    _STATS["evaluations"] += evaluations
    value = total if vector else float(total[0])
    error = total_err if vector else float(total_err[0])
    return QuadResult(value, error, n_total, evaluations)
