"""Compare integrated monochromatic power with the weak and strong damping closed forms.

Each closed form is maximised over (omega1, Omega); the integrated power is
then evaluated at that optimum, for a range of damping strengths.
"""
import math

from duetherm.model import EngineParams
from duetherm.thermo import (max_closed_form, power_monochromatic, power_strong_pi, power_strong_zero,
                             power_weak_limit)

P = EngineParams()


def main():
    weak = max_closed_form(P.with_(gamma2=1e-4), "weak")
    print(f"weak optimum omega1={weak.omega1_star:.4f} Omega={weak.omega_star:.4f}")
    for g2 in (1e-4, 1e-3, 1e-2):
        q = P.with_(gamma2=g2, omega1=weak.omega1_star)
        r = power_monochromatic(q, weak.omega_star, 0.0) / float(power_weak_limit(q, weak.omega_star))
        print(f"  gamma2={g2:g}: numeric/closed = {r:.4f}")
    strong = max_closed_form(P.with_(gamma2=1e4), "strong_pi")
    print(f"strong optimum omega1={strong.omega1_star:.4f} Omega={strong.omega_star:.4f}")
    for g2 in (1e2, 1e3, 1e4):
        q = P.with_(gamma2=g2, omega1=strong.omega1_star)
        r_pi = power_monochromatic(q, strong.omega_star, math.pi) / float(power_strong_pi(q, strong.omega_star))
        qi = q.with_(topology="independent")
        r_ind = power_monochromatic(qi, strong.omega_star, 0.0) / float(power_strong_zero(qi, strong.omega_star))
        print(f"  gamma2={g2:g}: phi=pi numeric/closed = {r_pi:.4f}, independent numeric/P0 = {r_ind:.4f}")


if __name__ == "__main__":
    main()
