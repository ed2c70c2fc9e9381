"""Smallest planted/unplanted F_p gap of the cash-register instances per (p, N, k)."""

import argparse

import numpy as np

from fptrack import hard_instances as hi


def min_gap(p, N, k, rng, draws):
    P = hi.hard_params(p, "cash", N, k)
    worst = np.inf
    for _ in range(draws):
        inp = hi.random_hard_input(rng, N, k, players=min(k, N)).sorted()
        for j in range(len(inp.v)):
            x, v = inp.x, inp.v
            yes, no = list(inp.y), list(inp.y)
            yes[j] = x[v[j] - 1]
            no[j] = next(s for s in range(1, k + 1) if s != x[v[j] - 1])
            f_yes = hi.cash_checkpoint_vector(P, hi.HardInstanceInput(x, v, tuple(yes)), j)
            f_no = hi.cash_checkpoint_vector(P, hi.HardInstanceInput(x, v, tuple(no)), j)
            worst = min(worst, hi.gap_check(f_yes, f_no, p))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="0.5,1.5,2")
    ap.add_argument("--max-N", type=int, default=8)
    ap.add_argument("--max-k", type=int, default=4)
    ap.add_argument("--draws", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print("p,N,k,min_gap,threshold")
    for p in (float(x) for x in args.p.split(",")):
        for N in range(1, args.max_N + 1):
            for k in range(2, args.max_k + 1):
                g = min_gap(p, N, k, rng, args.draws)
                print(f"{p:g},{N},{k},{g:.6f},{hi.gap_threshold(p):.6f}")


if __name__ == "__main__":
    main()
