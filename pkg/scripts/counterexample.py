"""Equilibrium, eigenvalues and Routh-Hurwitz margins of the ADE equilibrium
for the counterexample parameters, over a range of beta1."""
import argparse

import numpy as np

from viraldyn.equilibria import ade_equilibrium
from viraldyn.model import COUNTEREXAMPLE
from viraldyn.stability import classify_equilibrium


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta1", type=float, nargs="*",
                    default=[1e-8, 1e-6, 1e-4, 1e-3, 0.01, 0.01188, 0.1, 1.0, 10.0, 100.0])
    args = ap.parse_args()
    print(f"{'beta1':>10s} {'T':>10s} {'I':>8s} {'A':>8s} {'max Re':>10s} {'hurwitz':>11s}  class")
    for b1 in args.beta1:
        p = COUNTEREXAMPLE.replace(beta1=b1)
        e = ade_equilibrium(p)
        rep = classify_equilibrium(p, e)
        s = e.state
        print(f"{b1:10.4g} {s.T:10.4f} {s.I:8.4f} {s.A:8.4f} {np.max(rep.eigenvalues.real):10.4g} "
              f"{rep.rh_margins['hurwitz']:11.4g}  {rep.classification.value}")
    p = COUNTEREXAMPLE
    rep = classify_equilibrium(p, ade_equilibrium(p))
    print("\neigenvalues at beta1 = 0.01188:", np.round(np.sort(rep.eigenvalues.real), 4))


if __name__ == "__main__":
    main()
