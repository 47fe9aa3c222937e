"""Batch command-line front end.

Every subcommand reads one JSON configuration (physical parameters plus
optional run settings), writes CSV files into ``--out`` and exactly one
``<command>.manifest.json`` describing them.  Exit status 1 means the configuration
was rejected, 2 means an integral failed to converge.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .entangle import (NoRoot, critical_temperature, gaussian_state, nu_from_works, nu_infinite_cutoff,
                       nu_strong_closed)
from .integrate import NoConvergence, integration_stats, reset_stats
from .model import EngineParams, ParamError, Topology, load_config, to_json_record, validate_params
from .pareto import DEFAULT_NORMS, OptimizerConfig, spectral_support, trace_front
from .response import chi2_imag, hybrid_frequency, normal_modes
from .thermo import (DEFAULT_PHIS, GridSpec, max_closed_form, max_power, p_tilde, power_map,
                     power_monochromatic, works_and_delta)

COMMANDS = ("response", "poles", "power-map", "power-max", "pareto", "entangle")
PROFILES = {
    "desk": {"n_max": 500, "grid": 200},
    "paper": {"n_max": 5000, "grid": 400},
}
DEFAULT_SEED = 42


@dataclass
class RunManifest:
    command: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    integrator: dict = field(default_factory=dict)
    version: str = __version__
    seeds: list[int] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "outputs": self.outputs,
            "wall_time_s": self.wall_time,
            "integrator": self.integrator,
            "version": self.version,
            "seeds": self.seeds,
            **({"results": self.extra} if self.extra else {}),
        }


# ---------------------------------------------------------------- io helpers


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % (float(v) + 0.0)  # folds -0.0 into 0
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _sweep(spec, default: dict, log: bool) -> np.ndarray:
    s = {**default, **(spec or {})}
    for k in ("min", "max", "n"):
        if k not in s:
            raise ParamError([("Missing", k, "sweep needs min, max and n")])
    lo, hi, n = float(s["min"]), float(s["max"]), int(s["n"])
    if n < 1 or not (hi >= lo) or (log and lo <= 0):
        raise ParamError([("BadValue", "sweep", f"bad sweep {s}")])
    return np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)


@dataclass
class RunSettings:
    params: EngineParams
    raw: dict
    seed: int
    workers: int
    profile: str

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def grid(self) -> GridSpec:
        g = self.raw.get("grid", {})
        if isinstance(g, int):
            g = {"n_omega": g, "n_omega1": g}
        n = PROFILES[self.profile]["grid"]
        try:
            return GridSpec(float(g.get("omega_max", 1.2)), float(g.get("omega1_max", 2.0)),
                            int(g.get("n_omega", n)), int(g.get("n_omega1", n)))
        except (TypeError, ValueError, AttributeError) as exc:
            raise ParamError([("BadValue", "grid", str(exc))]) from None

    def n_max(self) -> int:
        return int(self.raw.get("n_max", PROFILES[self.profile]["n_max"]))


# ---------------------------------------------------------------- commands


def cmd_response(rs: RunSettings, out: Path, man: RunManifest):
    omegas = _sweep(rs.get("omega_grid"), {"min": 1e-3, "max": 2.0, "n": 2000}, log=False)
    aa, ab, bb = chi2_imag(rs.params, omegas)
    rows = zip(omegas, aa + bb, aa, ab, bb)
    man.outputs.append(str(write_csv(out / "response.csv", ["omega", "lambda", "chiAA_im", "chiAB_im", "chiBB_im"], rows)))
    man.extra["hybrid_frequency"] = hybrid_frequency(rs.params)


def cmd_poles(rs: RunSettings, out: Path, man: RunManifest):
    gammas = _sweep(rs.get("gamma2_sweep"), {"min": 1e-2, "max": 1e3, "n": 101}, log=True)
    rows = []
    for g in gammas:
        z = normal_modes(rs.params.with_(gamma2=float(g))).zeros
        rows.append([g] + [c for zi in z for c in (zi.real, zi.imag)])
    header = ["gamma2"] + [f"z{k}_{part}" for k in range(1, 5) for part in ("re", "im")]
    man.outputs.append(str(write_csv(out / "poles.csv", header, rows)))


def _ridge_cuts(p: EngineParams, omegas: np.ndarray):
    wbar = hybrid_frequency(p)
    rows = []
    for name, base in (("omega_a", p.omega_a), ("omega_b", p.omega_b), ("hybrid", wbar)):
        for Om in omegas:
            q = p.with_(omega1=float(base + Om))
            vals = [p_tilde(q, power_monochromatic(q, float(Om), phi, rel_tol=1e-6)) for phi in DEFAULT_PHIS]
            rows.append([name, Om, base + Om, *vals])
    return rows


def cmd_power_map(rs: RunSettings, out: Path, man: RunManifest):
    phis = tuple(float(x) for x in rs.get("phis", DEFAULT_PHIS))
    pm = power_map(rs.params, rs.grid(), phis, workers=rs.workers)
    man.outputs.append(str(write_csv(out / "power_map.csv", ["omega1", "Omega", "P_tilde", "phi_star"], pm.rows())))
    cuts = _ridge_cuts(rs.params, pm.omegas)
    man.outputs.append(str(write_csv(out / "ridges.csv", ["ridge", "Omega", "omega1", "P_tilde_phi0", "P_tilde_phipi"], cuts)))
    i, j = pm.argmin()
    man.extra["min_cell"] = {"omega1": float(pm.omega1s[j]), "Omega": float(pm.omegas[i]),
                             "P_tilde": float(pm.p_tilde[i, j]), "phi_star": float(pm.phi_star[i, j])}


def cmd_power_max(rs: RunSettings, out: Path, man: RunManifest):
    gammas = _sweep(rs.get("gamma2_sweep"), {"min": 1e-2, "max": 1e2, "n": 9}, log=True)
    grid = rs.grid()
    rows = []
    for g in gammas:
        o = max_power(rs.params.with_(gamma2=float(g)), grid, workers=rs.workers)
        rows.append([o.gamma2, o.p_tilde_max, o.omega1_star, o.omega_star, o.phi_star])
    header = ["gamma2", "P_tilde_max", "omega1_star", "Omega_star", "phi_star"]
    man.outputs.append(str(write_csv(out / "power_max.csv", header, rows)))

    wbs = _sweep(rs.get("omega_b_sweep"), {"min": 0.05, "max": 0.95, "n": 19}, log=False)
    rows = []
    for wb in wbs:
        for g, which in ((1e-4, "weak"), (1e4, "strong_pi")):
            q = rs.params.with_(omega_b=float(wb), gamma2=g, topology=Topology.JOINT.value)
            o = max_closed_form(q, which)
            rows.append([wb, g, o.p_tilde_max, o.omega1_star, o.omega_star, o.phi_star])
    man.outputs.append(str(write_csv(out / "power_max_limits.csv", ["omega_b"] + header, rows)))


def cmd_pareto(rs: RunSettings, out: Path, man: RunManifest):
    p = rs.params
    Omega = float(rs.get("fundamental", 1e-3))
    n_max = rs.n_max()
    nseeds = int(rs.get("seeds", 3))
    seeds = [rs.seed + k for k in range(nseeds)]
    man.seeds = seeds
    config = OptimizerConfig(iterations=int(rs.get("iterations", OptimizerConfig.iterations)))
    norms = rs.get("norms", DEFAULT_NORMS)
    if len(norms) != 2 or not all(float(x) >= 0 for x in norms) or not any(float(x) > 0 for x in norms):
        raise ParamError([("BadValue", "norms", "need two non-negative drive norms, not both zero")])
    norms = (float(norms[0]), float(norms[1]))
    joint = p.with_(topology=Topology.JOINT.value)
    w1 = rs.get("omega1_star")
    if w1 is None:
        w1 = max_power(joint, rs.grid(), workers=rs.workers).omega1_star
    man.extra["omega1_star"] = float(w1)
    for top in (Topology.JOINT, Topology.INDEPENDENT):
        q = p.with_(topology=top.value, omega1=float(w1))
        run = trace_front(q, Omega, n_max, int(rs.get("ladder_size", 24)), seeds, config, norms, workers=rs.workers)
        front_ids = {id(x) for x in run.front.points}
        rows, spec_rows = [], []
        for pt in run.front.runs:
            eta = pt.eta / q.eta_carnot if pt.eta is not None else float("nan")
            rows.append([pt.sigma, pt.neg_power * q.omega_a**2 / q.d1, eta, pt.converged, id(pt) in front_ids])
            if id(pt) in front_ids:
                g2 = 2.0 * np.abs(pt.drive.coeffs) ** 2
                freqs = pt.drive.frequencies()
                for l, name in ((0, "A"), (1, "B")):
                    for n in np.nonzero(g2[:, l] > 0)[0]:
                        spec_rows.append([pt.sigma, name, freqs[n], g2[n, l]])
        tag = top.value
        man.outputs.append(str(write_csv(out / f"front_{tag}.csv",
                                         ["sigma_tilde", "P_tilde_neg", "eta_over_etaC", "converged", "on_front"], rows)))
        man.outputs.append(str(write_csv(out / f"spectra_{tag}.csv", ["sigma_tilde", "l", "omega", "g_squared"], spec_rows)))
        man.extra[tag] = {
            "max_power": {"sigma": run.max_power.sigma, "P": run.max_power.power},
            "min_sigma": run.min_sigma.sigma,
            "converged": sum(r.converged for r in run.front.runs),
            "front_points": len(run.front.points),
            "max_support": max((spectral_support(x.drive).count for x in run.front.points), default=0),
        }


def cmd_entangle(rs: RunSettings, out: Path, man: RunManifest, from_works: bool):
    p = rs.params
    if from_works:
        w1s = float(rs.get("omega1_star", 0.4))
        result = _works_round_trip(p, w1s)
        sens = []
        for fg in (0.5, 2.0):
            sens.append({"gamma1": p.gamma1 * fg, "omega1_star": w1s,
                         **_works_round_trip(p.with_(gamma1=p.gamma1 * fg), w1s)})
        for fw in (0.75, 1.25):
            sens.append({"gamma1": p.gamma1, "omega1_star": w1s * fw, **_works_round_trip(p, w1s * fw)})
        result["sensitivity"] = sens
        path = out / "works.json"
        path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
        man.outputs.append(str(path))
        man.extra.update({k: result[k] for k in ("nu2_works", "nu2_closed", "rel_diff")})
        print(json.dumps({k: result[k] for k in ("nu2_works", "nu2_closed", "rel_diff")}))
        return

    temps = _sweep(rs.get("t2_sweep"), {"min": 0.01, "max": 1.0, "n": 40}, log=False)
    rows = []
    for t in temps:
        st = gaussian_state(p.with_(t2=float(t)))
        rows.append([t, st.nu_tilde, st.log_negativity])
    man.outputs.append(str(write_csv(out / "entangle_t2.csv", ["T2", "nu_tilde", "E_n"], rows)))

    wbs = _sweep(rs.get("omega_b_sweep"), {"min": 0.05, "max": 0.95, "n": 19}, log=False)
    rows = []
    for wb in wbs:
        q = p.with_(omega_b=float(wb))
        try:
            tc = critical_temperature(q, "exact")
        except NoRoot:
            tc = float("nan")
        try:
            ts = critical_temperature(q, "strong_limit")
        except NoRoot:
            ts = float("nan")
        rows.append([wb, tc, ts])
    man.outputs.append(str(write_csv(out / "entangle_tc.csv", ["omega_b", "T_c", "T_star"], rows)))
    if p.topology is Topology.JOINT:
        man.extra["nu_infinite_cutoff"] = nu_infinite_cutoff(p)


def _works_round_trip(p: EngineParams, omega1_star: float) -> dict:
    w0 = works_and_delta(p, omega1_star, 0.0)
    wp = works_and_delta(p, omega1_star, math.pi)
    nu2 = nu_from_works(w0.delta, wp.delta, p.t2, hybrid_frequency(p))
    closed = nu_strong_closed(p) ** 2
    return {"delta_w_0": w0.delta, "delta_w_pi": wp.delta, "nu2_works": nu2, "nu2_closed": closed,
            "rel_diff": nu2 / closed - 1.0}


# ---------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="duetherm", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON configuration (defaults are used when omitted)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--threads", type=int, default=None, help="worker processes (env DUETHERM_THREADS)")
    ap.add_argument("--profile", choices=tuple(PROFILES), default="desk")
    ap.add_argument("--from-works", action="store_true", help="entangle: work-based round trip")
    return ap


def _settings(args) -> RunSettings:
    if args.config is None:
        raw: dict[str, Any] = {}
        params = validate_params({})
    else:
        params = load_config(args.config)
        text = args.config.read_text()
        raw = json.loads(text) if text.strip() else {}
    threads = args.threads
    if threads is None:
        env = os.environ.get("DUETHERM_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ParamError([("BadValue", "DUETHERM_THREADS", f"not an integer: {env!r}")]) from None
    if threads < 1:
        raise ParamError([("NonPositive", "threads", "must be >= 1")])
    if args.seed < 0:
        raise ParamError([("BadValue", "seed", "must be a non-negative integer")])
    return RunSettings(params, raw, args.seed, threads, args.profile)


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rs = _settings(args)
    except ParamError as exc:
        print(json.dumps(exc.to_json()))
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "ParamError", "issues": [{"kind": "BadValue", "field": "config", "message": str(exc)}]}))
        return 1

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    snapshot = {"params": to_json_record(rs.params),
                "run": {k: v for k, v in rs.raw.items() if not k.startswith("_") and k not in rs.params.to_record()},
                "profile": rs.profile, "threads": rs.workers}
    man = RunManifest(args.command, snapshot, seeds=[rs.seed])
    reset_stats()
    t0 = time.perf_counter()
    try:
        if args.command == "entangle":
            cmd_entangle(rs, out, man, args.from_works)
        else:
            handler = {"response": cmd_response, "poles": cmd_poles, "power-map": cmd_power_map,
                       "power-max": cmd_power_max, "pareto": cmd_pareto}[args.command]
            handler(rs, out, man)
    except ParamError as exc:
        print(json.dumps(exc.to_json()))
        return 1
    except NoConvergence as exc:
        print(json.dumps({"error": "NoConvergence", "message": str(exc), "panels": exc.panels, "context": exc.context}))
        return 2
    man.wall_time = time.perf_counter() - t0
    # counts cover integrals evaluated in this process only
    man.integrator = integration_stats()
    (out / f"{args.command}.manifest.json").write_text(json.dumps(man.to_json(), indent=2, sort_keys=True, default=float) + "\n")
    return 0


def main() -> None:
    sys.exit(run())
