"""Sampled l1-ball stability of the AMS ratio around a random centre."""

import argparse

import numpy as np

from fptrack.tracker import ball_stability_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--coeffs", default="0,0.05,0.1,0.2,0.5,1,2")
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--exponent", type=float, default=1.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    center = np.random.default_rng(args.seed).integers(1, 101, size=args.dim).astype(float)
    print("radius_coeff,radius,probability,center_rate")
    for c in (float(x) for x in args.coeffs.split(",")):
        res = ball_stability_experiment(center, args.eps, c, args.trials, args.samples,
                                        seed=args.seed, exponent=args.exponent)
        print(f"{c:g},{res.radius:.6g},{res.probability:.4f},{res.center_rate:.4f}")


if __name__ == "__main__":
    main()
