"""Power/entropy-production Pareto fronts over arbitrary periodic drives.

For a fixed fundamental the power and entropy production are block-diagonal
quadratic forms in the real Fourier coefficients.  Fronts are traced by
minimising P at a ladder of fixed sigma with a penalty Lagrangian, the
coefficients being reparametrised so both norm constraints hold exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .integrate import Breakpoint, dedupe, integrate_line
from .model import EngineParams, Topology
from .response import chi2_imag_over_omega, normal_modes
from .thermo import DriveSpectrum, drive_kernel

DEFAULT_NORMS = (1 / math.sqrt(2), 1 / math.sqrt(2))


class FundamentalMismatch(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticForms:
    """Per-harmonic 2x2 blocks with P = sum g_n^T IP_n g_n (same for sigma and J2)."""

    params: EngineParams
    fundamental: float
    ip_blocks: np.ndarray
    isigma_blocks: np.ndarray
    ij2_blocks: np.ndarray

    @property
    def n_max(self) -> int:
        return self.ip_blocks.shape[0]

    def frequencies(self) -> np.ndarray:
        return self.fundamental * np.arange(1, self.n_max + 1)


def _block_chunk(args):
    p, Omega, ns, rel_tol, abs_tol = args
    bps = [Breakpoint(0.0, min(p.t1, p.t2))]
    for z in normal_modes(p):
        bps.append(Breakpoint(float(z.real), abs(float(z.imag))))
    nus = Omega * np.asarray(ns, dtype=float)
    for nu in nus:
        bps += [Breakpoint(p.omega1 - nu, p.gamma1 / 2), Breakpoint(-p.omega1 - nu, p.gamma1 / 2)]
    bps = dedupe(bps)

    def f(w):
        aa, ab, bb = chi2_imag_over_omega(p, w)
        kern = np.stack([drive_kernel(p, w, nu) for nu in nus])
        chis = np.stack([aa, ab, bb])
        plain = (kern[:, None, :] * chis[None]).reshape(-1, w.size)
        return np.concatenate([plain, plain * w], axis=0)

    ctx = f"harmonics {ns[0]}..{ns[-1]}"
    res = integrate_line(f, bps, rel_tol, abs_tol, context=ctx)
    k = len(ns)
    vals = np.asarray(res.value)
    return vals[: 3 * k].reshape(k, 3), vals[3 * k:].reshape(k, 3), res.panels


def _to_blocks(entries: np.ndarray) -> np.ndarray:
    aa, ab, bb = entries[:, 0], entries[:, 1], entries[:, 2]
    return np.stack([np.stack([aa, ab], -1), np.stack([ab, bb], -1)], -2)


def build_forms(p: EngineParams, Omega: float, n_max: int, chunk: int = 25, workers: int = 1,
                rel_tol: float = 1e-8, abs_tol: float = 1e-14) -> QuadraticForms:
    """Integrate the blocks for harmonics 1..n_max.

    Harmonics are integrated a chunk at a time as one vector-valued integral;
    a failure names the chunk's harmonic range.
    """
    ns = np.arange(1, n_max + 1)
    jobs = [(p, Omega, ns[i:i + chunk], rel_tol, abs_tol) for i in range(0, n_max, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_block_chunk, jobs))
    else:
        parts = [_block_chunk(j) for j in jobs]
    plain = np.concatenate([x[0] for x in parts])
    weighted = np.concatenate([x[1] for x in parts])
    nu = Omega * ns[:, None]
    ip = _to_blocks(-2.0 * nu * plain)
    ij2 = _to_blocks(-2.0 * weighted)
    isigma = ip / p.t1 - (1.0 / p.t2 - 1.0 / p.t1) * ij2
    if p.topology is Topology.INDEPENDENT:
        for blocks in (ip, ij2, isigma):
            blocks[:, 0, 1] = blocks[:, 1, 0] = 0.0
    return QuadraticForms(p, Omega, ip, isigma, ij2)


def _contract(blocks: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Row-wise I_n g_n for real g of shape (n, 2)."""
    return blocks[:, :, 0] * g[:, 0:1] + blocks[:, :, 1] * g[:, 1:2]


def _coefficients(forms: QuadraticForms, drive: DriveSpectrum) -> np.ndarray:
    if not math.isclose(drive.fundamental, forms.fundamental, rel_tol=1e-12):
        raise FundamentalMismatch(f"drive fundamental {drive.fundamental} != forms {forms.fundamental}")
    if drive.n_max > forms.n_max:
        raise FundamentalMismatch(f"drive has {drive.n_max} harmonics, forms only {forms.n_max}")
    g = np.zeros((forms.n_max, 2), dtype=drive.coeffs.dtype)
    g[: drive.n_max] = drive.coeffs
    return g


def _quad(blocks, g) -> float:
    if np.iscomplexobj(g):
        return float(np.real(np.sum(np.conj(g) * (blocks[:, :, 0] * g[:, 0:1] + blocks[:, :, 1] * g[:, 1:2]))))
    return float(np.sum(g * _contract(blocks, g)))


def evaluate(forms: QuadraticForms, drive: DriveSpectrum) -> tuple[float, float]:
    """(P, sigma) of a drive from the precomputed blocks."""
    g = _coefficients(forms, drive)
    return _quad(forms.ip_blocks, g), _quad(forms.isigma_blocks, g)


def evaluate_heat(forms: QuadraticForms, drive: DriveSpectrum) -> tuple[float, float]:
    """(J1, J2), with J1 closed by the first law."""
    g = _coefficients(forms, drive)
    j2 = _quad(forms.ij2_blocks, g)
    return -_quad(forms.ip_blocks, g) - j2, j2


# ---------------------------------------------------------------- optimiser


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the penalty-Lagrangian descent.

    ``multiplier="augmented"`` (default) applies the penalty to the relative
    gap (sigma/target - 1) and moves alpha by a damped multiplier-method step
    ``dual_step * 2 * penalty_eff * gap`` every iteration, with the Adam step
    size cosine-annealed to ``lr_floor`` over the final part of the run.
    ``multiplier="log_ascent"`` is the plain scheme: alpha = exp(beta),
    gradient ascent on beta with ``lr_beta``, constant Adam step, absolute
    penalty.
    """

    iterations: int = 64_000
    lr_g: float = 0.01
    lr_beta: float = 0.003
    penalty: float = 1.0
    multiplier: str = "augmented"
    dual_step: float = 0.01
    lr_floor: float = 1e-5
    decay_start: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    sigma_rel_tol: float = 1e-3

    def __post_init__(self):
        if self.multiplier not in ("augmented", "log_ascent"):
            raise ValueError(f"unknown multiplier scheme {self.multiplier!r}")

    @classmethod
    def log_ascent(cls, **kw) -> "OptimizerConfig":
        return cls(multiplier="log_ascent", lr_floor=kw.pop("lr_floor", 0.01), **kw)


class Adam:
    """Adaptive moment estimation for a single array of parameters (minimisation)."""

    def __init__(self, shape, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, x: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return x - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _learning_rate(config: OptimizerConfig, it: int) -> float:
    if config.multiplier == "log_ascent":
        return config.lr_g
    k0 = int(config.decay_start * config.iterations)
    if it < k0:
        return config.lr_g
    x = (it - k0) / max(config.iterations - k0, 1)
    return config.lr_floor + (config.lr_g - config.lr_floor) * 0.5 * (1 + math.cos(math.pi * x))


def _split(blocks: np.ndarray) -> np.ndarray:
    """(n, 2, 2) blocks as a (2, 2, n) array for row-wise products."""
    return np.ascontiguousarray(np.moveaxis(blocks, 0, -1))


def _descend(forms: QuadraticForms, objective: np.ndarray, target: float | None, norms, seed: int,
             config: OptimizerConfig) -> tuple[np.ndarray, float]:
    """Adam on the unnormalised coefficients; returns (g_tilde with shape (n, 2), alpha).

    Works on (2, n) arrays throughout.  The multiplier is updated from the
    gap measured before each step.
    """
    rng = np.random.default_rng(seed)
    gt = rng.random((forms.n_max, 2)).T.copy()
    scale = np.array([norms[0], norms[1]]) / math.sqrt(2)
    live = scale > 0
    gt[~live] = 0.0
    obj = _split(objective)
    sig = _split(forms.isigma_blocks)
    adam = Adam(gt.shape, config.lr_g, config.beta1, config.beta2, config.eps)
    augmented = config.multiplier == "augmented"
    pen = 0.0
    if target is not None:
        pen = config.penalty / target**2 if augmented else config.penalty
    beta, alpha = 0.0, 1.0
    for it in range(config.iterations):
        adam.lr = _learning_rate(config, it)
        s = np.sqrt(np.einsum("ln,ln->l", gt, gt))
        s[~live] = 1.0
        u = gt / s[:, None]
        g = scale[:, None] * u
        grad = 2.0 * (obj[:, 0] * g[0] + obj[:, 1] * g[1])
        if target is not None:
            sg = sig[:, 0] * g[0] + sig[:, 1] * g[1]
            gap = float(np.einsum("ln,ln->", g, sg)) - target
            grad += (alpha + 2.0 * pen * gap) * 2.0 * sg
        radial = np.einsum("ln,ln->l", u, grad)
        gt = adam.step(gt, (scale / s)[:, None] * (grad - u * radial[:, None]))
        if target is not None:
            if augmented:
                alpha = max(alpha + config.dual_step * 2.0 * pen * gap, 0.0)
            else:
                # clamp keeps exp(beta) finite when the gap stays one-signed for long
                beta = min(max(beta + config.lr_beta * alpha * gap, -50.0), 50.0)
                alpha = math.exp(beta)
    return gt.T.copy(), alpha


@dataclass(frozen=True)
class Certificate:
    """First- and second-order optimality data of a returned drive.

    With M = diag(mu_A, mu_B) fitted to the stationarity condition
    (I_obj + alpha I_sigma) g_n = M g_n, a negligible ``residual`` together
    with ``min_eig`` >= 0 for every block of I_obj + alpha I_sigma - M proves
    the drive is a global optimum of the constrained problem.
    """

    residual: float
    min_eig: float
    mu: tuple[float, float]

    def holds(self, res_tol: float = 1e-8, eig_tol: float = 1e-9) -> bool:
        return self.residual <= res_tol and self.min_eig >= -eig_tol


def certificate(objective: np.ndarray, drive: DriveSpectrum, forms: QuadraticForms,
                alpha: float | None = None) -> Certificate:
    lag = objective if alpha is None else objective + alpha * forms.isigma_blocks
    g = _coefficients(forms, drive).real
    lg = _contract(lag, g)
    mass = np.sum(g * g, axis=0)
    mu = np.where(mass > 0, np.sum(lg * g, axis=0) / np.where(mass > 0, mass, 1.0), 0.0)
    res = np.linalg.norm(lg - mu * g) / max(np.linalg.norm(lg), 1e-300)
    shifted = lag - np.diag(mu)[None]
    live = mass > 0
    if not live.all():
        # a zero-norm oscillator imposes no condition on its own entries
        shifted = shifted[:, live][:, :, live]
    scale = max(float(np.max(np.abs(lag))), 1e-300)
    min_eig = float(np.linalg.eigvalsh(shifted).min()) / scale
    return Certificate(float(res), min_eig, (float(mu[0]), float(mu[1])))


@dataclass(frozen=True)
class OptimizeResult:
    drive: DriveSpectrum
    power: float
    sigma: float
    converged: bool
    sigma_target: float | None
    seed: int
    multiplier: float | None = None
    certified: bool = False


def _finish(forms, objective, gt, alpha, target, norms, seed, config) -> OptimizeResult:
    drive = DriveSpectrum.from_tilde(forms.fundamental, gt, norms)
    power, sigma = evaluate(forms, drive)
    if target is None:
        converged, alpha = True, None
    else:
        converged = abs(sigma - target) / target <= config.sigma_rel_tol
    cert = certificate(objective, drive, forms, alpha)
    return OptimizeResult(drive, power, sigma, converged, target, seed, alpha, converged and cert.holds())


def optimize_point(forms: QuadraticForms, sigma_target: float | None, norms=DEFAULT_NORMS, seed: int = 0,
                   config: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    """Minimise P at sigma = sigma_target (or without the sigma constraint when None).

    L = P + alpha (sigma - target) + penalty term; Adam steps on the
    unconstrained coefficients alternate with multiplier updates.
    """
    if sigma_target is not None and not sigma_target > 0:
        raise ValueError("sigma_target must be > 0")
    gt, alpha = _descend(forms, forms.ip_blocks, sigma_target, norms, seed, config)
    return _finish(forms, forms.ip_blocks, gt, alpha, sigma_target, norms, seed, config)


def _best_of(run_one, seeds: Sequence[int], key) -> OptimizeResult:
    """Try seeds in order, stopping at the first certified optimum."""
    runs = []
    for s in seeds:
        r = run_one(s)
        if r.certified:
            return r
        runs.append(r)
    ok = [r for r in runs if r.converged] or runs
    return min(ok, key=key)


def max_power_point(forms: QuadraticForms, norms=DEFAULT_NORMS, seeds: Sequence[int] = (0,),
                    config: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    return _best_of(lambda s: optimize_point(forms, None, norms, s, config), seeds, lambda r: r.power)


def min_sigma_point(forms: QuadraticForms, norms=DEFAULT_NORMS, seeds: Sequence[int] = (0,),
                    config: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    """Least entropy production reachable under the norm constraints."""

    def one(s):
        gt, _ = _descend(forms, forms.isigma_blocks, None, norms, s, config)
        return _finish(forms, forms.isigma_blocks, gt, None, None, norms, s, config)

    return _best_of(one, seeds, lambda r: r.sigma)


def sigma_ladder(sigma_max: float, size: int = 24, low: float = 0.02, sigma_floor: float = 0.0,
                 floor_margin: float = 0.15) -> np.ndarray:
    """Log-spaced targets from ``low * sigma_max`` to ``sigma_max``.

    The lower end is raised to ``(1 + floor_margin) * sigma_floor`` when the
    norms make smaller entropy production unreachable.
    """
    lo = max(low * sigma_max, (1.0 + floor_margin) * sigma_floor)
    if lo >= sigma_max:
        return np.array([sigma_max])
    return np.geomspace(lo, sigma_max, size)


# ---------------------------------------------------------------- fronts


@dataclass(frozen=True)
class FrontPoint:
    sigma: float
    power: float
    eta: float | None
    drive: DriveSpectrum
    converged: bool
    certified: bool = False

    @property
    def neg_power(self) -> float:
        return -self.power


def eta_from_sigma(p: EngineParams, sigma: float, power: float) -> float | None:
    """eta_C / (1 - sigma T2 / P) for an engine point (P < 0)."""
    if not power < 0:
        return None
    return p.eta_carnot / (1.0 - sigma * p.t2 / power)


def dominance_filter(points: Sequence, x, y) -> list:
    """Keep points not dominated when minimising x(pt) and maximising y(pt); sorted by x."""
    pts = sorted(points, key=lambda q: (x(q), -y(q)))
    kept = []
    best_y = -math.inf
    for q in pts:
        if y(q) > best_y:
            kept.append(q)
            best_y = y(q)
    return kept


@dataclass
class ParetoFront:
    params: EngineParams
    runs: list[FrontPoint]
    points: list[FrontPoint] = field(init=False)
    eta_front: list[FrontPoint] = field(init=False)

    def __post_init__(self):
        good = [r for r in self.runs if r.converged]
        self.points = dominance_filter(good, lambda q: q.sigma, lambda q: q.neg_power)
        engines = [q for q in self.points if q.eta is not None]
        # maximise eta: minimise -eta
        self.eta_front = dominance_filter(engines, lambda q: -q.eta, lambda q: q.neg_power)
        self.eta_front.sort(key=lambda q: q.sigma)


def _run_target(args):
    forms, target, norms, seeds, config = args
    return _best_of(lambda s: optimize_point(forms, target, norms, s, config), seeds, lambda r: r.power)


def pareto_front(forms: QuadraticForms, ladder: Sequence[float], norms=DEFAULT_NORMS,
                 seeds: Sequence[int] = (0, 1, 2), config: OptimizerConfig = OptimizerConfig(),
                 workers: int = 1) -> ParetoFront:
    """Best-of-seeds optimum at every ladder target, then dominance filtering in both planes."""
    jobs = [(forms, float(t), tuple(norms), tuple(seeds), config) for t in ladder]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            best = list(pool.map(_run_target, jobs))
    else:
        best = [_run_target(j) for j in jobs]
    p = forms.params
    runs = [FrontPoint(r.sigma, r.power, eta_from_sigma(p, r.sigma, r.power), r.drive, r.converged, r.certified) for r in best]
    runs.sort(key=lambda q: q.sigma)
    return ParetoFront(p, runs)


@dataclass
class FrontRun:
    """Everything produced while tracing one topology's front."""

    forms: QuadraticForms
    max_power: OptimizeResult
    min_sigma: OptimizeResult
    ladder: np.ndarray
    front: ParetoFront


def trace_front(p: EngineParams, Omega: float, n_max: int, ladder_size: int = 24,
                seeds: Sequence[int] = (0, 1, 2), config: OptimizerConfig = OptimizerConfig(),
                norms=DEFAULT_NORMS, workers: int = 1, forms: QuadraticForms | None = None) -> FrontRun:
    """Blocks, the two anchor optima, the sigma ladder between them and the front."""
    if forms is None:
        forms = build_forms(p, Omega, n_max, workers=workers)
    mx = max_power_point(forms, norms, seeds, config)
    mn = min_sigma_point(forms, norms, seeds, config)
    ladder = sigma_ladder(mx.sigma, ladder_size, sigma_floor=mn.sigma)
    front = pareto_front(forms, ladder, norms, seeds, config, workers)
    return FrontRun(forms, mx, mn, ladder, front)


def upper_hull(xs: Sequence[float], ys: Sequence[float]) -> list[int]:
    """Indices of the vertices of the upper concave envelope (monotone chain)."""
    order = sorted(range(len(xs)), key=lambda i: (xs[i], ys[i]))
    hull: list[int] = []
    for i in order:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def convex_points(front: ParetoFront) -> list[FrontPoint]:
    """Front points that are vertices of the upper envelope in (sigma, -P)."""
    pts = front.points
    idx = upper_hull([q.sigma for q in pts], [q.neg_power for q in pts])
    return [pts[i] for i in idx]


# ---------------------------------------------------------------- spectra


@dataclass(frozen=True)
class Support:
    count: int
    frequencies: list[float]
    clusters: list[list[int]]


def spectral_support(drive: DriveSpectrum, mass_fraction: float = 0.99, merge_steps: int = 3) -> Support:
    """Fewest harmonics holding ``mass_fraction`` of the squared norm, counted as clusters.

    Harmonics at most ``merge_steps`` grid steps apart are treated as one
    frequency; each cluster is reported at its mass-weighted mean frequency.
    """
    mass = np.sum(np.abs(drive.coeffs) ** 2, axis=1)
    total = float(mass.sum())
    if total == 0:
        return Support(0, [], [])
    order = np.argsort(-mass, kind="stable")
    cum = np.cumsum(mass[order])
    k = int(np.searchsorted(cum, mass_fraction * total * (1 - 1e-12))) + 1
    chosen = sorted(int(n) + 1 for n in order[:k])
    clusters: list[list[int]] = [[chosen[0]]]
    for n in chosen[1:]:
        if n - clusters[-1][-1] <= merge_steps:
            clusters[-1].append(n)
        else:
            clusters.append([n])
    freqs = []
    for c in clusters:
        w = mass[np.array(c) - 1]
        freqs.append(float(drive.fundamental * np.sum(np.array(c) * w) / np.sum(w)))
    return Support(len(clusters), freqs, clusters)
