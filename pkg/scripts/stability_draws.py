"""Random-draw check of the equilibrium stability pattern for beta1 = 0.

Draws parameters log-uniformly around baseline, keeps those with delta > mu
and w > 0, and tabulates the classification of each equilibrium kind.
"""
import argparse
from collections import Counter

import numpy as np

from viraldyn.equilibria import immunosuppression_equilibrium, no_ade_equilibrium, trivial_equilibrium
from viraldyn.sampling import draw_params
from viraldyn.stability import characteristic_quartic, classify_equilibrium, gamma_closed_form_no_ade, jacobian_basic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=500)
    ap.add_argument("--decades", type=float, default=3.0)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()
    draws = draw_params(np.random.default_rng(args.seed), args.n, args.decades)
    counts = Counter()
    worst_gamma = 0.0
    for p in draws:
        for make in (trivial_equilibrium, immunosuppression_equilibrium, no_ade_equilibrium):
            e = make(p)
            rep = classify_equilibrium(p, e)
            counts[(e.kind.value, rep.classification.value)] += 1
            if e.kind.value == "NoAde":
                counts[("NoAde", "RH pass")] += rep.rh_pass
                counts[("NoAde", "all Re < 0")] += bool(np.all(rep.eigenvalues.real < 0))
                q = characteristic_quartic(jacobian_basic(p, e.state))
                g = gamma_closed_form_no_ade(p)
                worst_gamma = max(worst_gamma, max(abs(x - y) / abs(y) for x, y in zip(q.coeffs, g.coeffs)))
    for (kind, what), n in sorted(counts.items()):
        print(f"{kind:18s} {what:12s} {n:5d} / {len(draws)}")
    print(f"closed-form coefficient max relative error: {worst_gamma:.3e}")


if __name__ == "__main__":
    main()
