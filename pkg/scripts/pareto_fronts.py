"""Power/entropy-production Pareto fronts of both topologies at the joint max-power omega1.

Prints each front as (sigma, -P, eta/eta_C, spectral support) rows.
"""
import argparse

from duetherm.model import EngineParams
from duetherm.pareto import convex_points, spectral_support, trace_front
from duetherm.thermo import GridSpec, max_power


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma2", type=float, default=0.1)
    ap.add_argument("--omega-b", type=float, default=0.6)
    ap.add_argument("--n-max", type=int, default=500)
    ap.add_argument("--fundamental", type=float, default=1e-3)
    ap.add_argument("--ladder", type=int, default=24)
    ap.add_argument("--omega1", type=float, default=None, help="skip the map search and use this omega1")
    args = ap.parse_args()
    p = EngineParams(gamma2=args.gamma2, omega_b=args.omega_b)
    w1 = args.omega1 if args.omega1 is not None else max_power(p, GridSpec()).omega1_star
    print(f"omega1* = {w1:.6f}")
    for top in ("joint", "independent"):
        run = trace_front(p.with_(omega1=w1, topology=top), args.fundamental, args.n_max, args.ladder)
        convex = {id(q) for q in convex_points(run.front)}
        print(f"\n{top}: {len(run.front.points)} front points, max power P={run.max_power.power:.6f}")
        print(f"{'sigma':>10} {'-P':>10} {'eta/etaC':>9} support convex")
        for q in run.front.points:
            eta = float("nan") if q.eta is None else q.eta / p.eta_carnot
            print(f"{q.sigma:10.5f} {q.neg_power:10.6f} {eta:9.4f} {spectral_support(q.drive).count:7d} "
                  f"{'*' if id(q) in convex else ''}")


if __name__ == "__main__":
    main()
