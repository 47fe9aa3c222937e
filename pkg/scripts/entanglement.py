"""Logarithmic negativity against temperature and critical temperatures against omega_B."""
import argparse

import numpy as np

from duetherm.entangle import NoRoot, critical_temperature, gaussian_state
from duetherm.model import EngineParams


def tc_or_nan(p, mode):
    try:
        return critical_temperature(p, mode)
    except NoRoot:
        return float("nan")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma2", type=float, default=0.1)
    args = ap.parse_args()
    print("E_n(T2) at gamma2 =", args.gamma2)
    for wb in (0.3, 0.6, 0.8):
        p = EngineParams(gamma2=args.gamma2, omega_b=wb)
        vals = [gaussian_state(p.with_(t2=float(t))).log_negativity for t in np.linspace(0.01, 0.3, 8)]
        print(f"  omega_B={wb}: " + " ".join(f"{v:.4f}" for v in vals))
    print("\nT_c (exact) and T* (strong-damping closed form)")
    for g2 in (5.0, 20.0, 100.0):
        for wb in (0.3, 0.6, 0.9):
            p = EngineParams(gamma2=g2, omega_b=wb)
            print(f"  gamma2={g2:<5g} omega_B={wb}: T_c={tc_or_nan(p, 'exact'):.4f} "
                  f"T*={tc_or_nan(p, 'strong_limit'):.4f}")


if __name__ == "__main__":
    main()
