#!/usr/bin/env python3
"""How fast does Gauss-Hermite converge for E[log Phi(f)] as the variance grows?

Prints, per variance, the worst |E_n - E_2n| over a mean grid for a few orders.
The error grows quickly with the variance because log Phi is not entire.
"""

import argparse

import numpy as np

from svgp_fraud.likelihoods import BernoulliProbit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", default="10,20,40,80")
    ap.add_argument("--variances", default="0.5,1,1.5,2,3,5,10")
    args = ap.parse_args()
    orders = [int(o) for o in args.orders.split(",")]
    mu = np.linspace(-5, 5, 201)
    print("var\t" + "\t".join(f"|E{n}-E{2 * n}|" for n in orders))
    for v in (float(x) for x in args.variances.split(",")):
        gaps = []
        for n in orders:
            a, b = BernoulliProbit(n), BernoulliProbit(2 * n)
            gaps.append(max(np.max(np.abs(a.variational_expectations(y, mu, v) - b.variational_expectations(y, mu, v))) for y in (0, 1)))
        print(f"{v:g}\t" + "\t".join(f"{g:.2e}" for g in gaps))


if __name__ == "__main__":
    main()
