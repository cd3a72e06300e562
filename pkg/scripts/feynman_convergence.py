"""Gap between J*(-iq + 1/l) and the Feynman value on the test corpus.

Prints the gap at each decade of l and the product l * gap, which tends to
|dJ*/dlambda| at -iq because the approach is first order.
"""
import argparse

import numpy as np

from gbmpaths import feynman as fy
from gbmpaths.kernel_functions import preset
from gbmpaths.verification import functional_corpus


def derivative(F, q):
    lam = complex(0.0, -q)
    locs, wts = F.measure.locations, F.measure.weights
    dE = F.quadratic(locs) / (2 * lam**2) - 0.5j * lam**-1.5 * F.linear(locs)
    return abs(np.sum(wts * np.exp(F.exponent(lam)(locs)) * dE))


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--L", type=int, default=100_000)
    p.add_argument("--kernel", default="curved")
    p.add_argument("--grid", type=int, default=256)
    args = p.parse_args()
    kp = preset(args.kernel, M=args.grid)
    decades = [10**k for k in range(int(np.log10(args.L)) + 1)]
    for i, F in enumerate(functional_corpus(kp, seed=7)):
        for q in (1.0, -1.0, 2.0, -2.0):
            rep = fy.feynman_sequence_check(F, q, L_count=args.L)
            gaps = " ".join(f"{rep.gaps[l - 1]:.2e}" for l in decades)
            print(f"F{i} q={q:+.0f} gaps[{','.join(map(str, decades))}] = {gaps}  "
                  f"l*gap={args.L * rep.final_gap:.4f} |J'|={derivative(F, q):.4f}")


if __name__ == "__main__":
    main()
