"""Ratio-test divergence of the 1/m^2 measure as the drift coefficient varies.

For each drift scale c the mean is c * t on the drifted preset; the predicted
ratio limit is exp(-(g, a) / sqrt(2 q)).
"""
import argparse
import math

import numpy as np

from gbmpaths import feynman as fy
from gbmpaths.kernel_functions import preset


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=256)
    args = p.parse_args()
    base = preset("drifted", M=args.grid)
    print(f"{'scale':>7} {'(g,a)':>9} {'status':>14} {'L':>12} {'predicted':>12}")
    for c in np.linspace(-1.5, 1.5, 7):
        F = fy.alpha_functional(base.scaled_drift(float(c)))
        ga = float(F.g_dot_a[0])
        res = fy.feynman_limit(F, args.q)
        L = "" if res.ratio_limit is None else f"{res.ratio_limit:.8f}"
        pred = math.exp(-ga / math.sqrt(2 * abs(args.q)))
        print(f"{c:7.2f} {ga:9.4f} {res.status:>14} {L:>12} {pred:12.8f}")


if __name__ == "__main__":
    main()
