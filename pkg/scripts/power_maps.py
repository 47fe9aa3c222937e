"""Monochromatic power maps at moderate and strong damping, joint and independent.

Writes one CSV per map (omega1, Omega, P_tilde, phi_star) and prints the best
cell of each.
"""
import argparse
import csv
from pathlib import Path

from duetherm.model import EngineParams
from duetherm.thermo import GridSpec, power_map


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("maps"))
    ap.add_argument("--n", type=int, default=200, help="grid points per axis")
    ap.add_argument("--gamma2", type=float, nargs="+", default=[0.1, 100.0])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(n_omega=args.n, n_omega1=args.n)
    for g2 in args.gamma2:
        for top in ("joint", "independent"):
            p = EngineParams(gamma2=g2, topology=top)
            pm = power_map(p, grid)
            path = args.out / f"map_{top}_g{g2:g}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["omega1", "Omega", "P_tilde", "phi_star"])
                w.writerows(pm.rows())
            i, j = pm.argmin()
            print(f"{top:11s} gamma2={g2:<6g} min P~={pm.p_tilde[i, j]:+.5f} at omega1={pm.omega1s[j]:.3f}, "
                  f"Omega={pm.omegas[i]:.3f}, phi={pm.phi_star[i, j]:.3f} -> {path}")


if __name__ == "__main__":
    main()
