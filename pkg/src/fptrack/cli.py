"""Tracking experiments from the command line: run, calibrate, sweep, gen, ball-stability.

Exit codes: 0 success, 1 acceptance threshold missed, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import hard_instances as hi
from .harness import (CALIBRATION_GRID, ExperimentConfig, calibrate_constant, run_experiment,
                      scaling_sweep, sweep_csv, update_keyvalues)
from .stream_model import write_stream
from .tracker import ball_stability_experiment

EXIT_OK, EXIT_MISSED, EXIT_USAGE = 0, 1, 2


def _lengths(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad length list {text!r}")


def _load(path: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.load(path)
    except OSError as exc:
        raise ValueError(f"cannot read config: {exc}") from exc


def _usage(msg: str) -> int:
    print(f"track: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.out:
        cfg = cfg.replace(output=args.out)
    try:
        report = run_experiment(cfg)
    except ValueError as exc:
        return _usage(str(exc))
    print(report.summary())
    ok = report.passed(cfg.target)
    print(f"target={cfg.target} {'PASS' if ok else 'MISS'}")
    return EXIT_OK if ok else EXIT_MISSED


def cmd_calibrate(args) -> int:
    cfg = _load(args.config)
    grid = [float(g) for g in args.grid.split(",")] if args.grid else CALIBRATION_GRID
    res = calibrate_constant(cfg, args.target, grid)
    for C, rate in res.rates.items():
        print(f"C={C:g} success={rate:.4f}")
    if not res.ok:
        C, rate = res.best
        print(f"calibration failed: best C={C:g} reached {rate:.4f} < {args.target}")
        return EXIT_MISSED
    print(f"calibrated C={res.constant:g} over {res.trials} trials")
    if not args.no_write:
        update_keyvalues(args.config, {"constant": res.constant})
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    rows = scaling_sweep(cfg, args.lengths, trials=args.trials, target=args.target)
    text = sweep_csv(rows)
    out = args.out or cfg.output
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    print(text, end="")
    if any(r.l_min is None for r in rows):
        return EXIT_MISSED
    return EXIT_OK


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    checkpoints = None
    if args.family == "zipf":
        stream = hi.gen_zipf(args.n, args.m, args.skew, args.seed)
    elif args.family == "uniform":
        stream = hi.gen_uniform(args.n, args.m, args.seed)
    elif args.family == "cash-hard":
        params = hi.hard_params(args.p, "cash", args.N, args.k)
        inp = hi.random_hard_input(rng, args.N, args.k)
        hs = hi.gen_cash_hard(params, inp)
        stream, checkpoints = hs.stream, hs.checkpoints
    else:
        params = hi.hard_params(args.p, "turnstile", args.N, args.k)
        insts = []
        for _ in range(args.k):
            a = tuple(int(s) for s in rng.integers(1, args.k + 1, size=args.N))
            t = int(rng.integers(1, args.N + 1))
            q = a[t - 1] if rng.integers(2) else int(rng.integers(1, args.k + 1))
            insts.append(hi.TurnstileInput(a, t, q))
        hs = hi.gen_turnstile_hard(params, insts)
        stream, checkpoints = hs.stream, hs.checkpoints
    write_stream(args.out, stream, comment=f"family {args.family} seed {args.seed}")
    if checkpoints is not None:
        hi.write_checkpoints(args.out + ".checkpoints", checkpoints)
    print(f"wrote {len(stream)} events (mass {stream.mass}) to {args.out}")
    return EXIT_OK


def cmd_ball(args) -> int:
    rng = np.random.default_rng(args.seed)
    center = rng.integers(1, 101, size=args.dim).astype(float)
    res = ball_stability_experiment(center, args.eps, args.radius_coeff, args.trials,
                                    args.samples, seed=args.seed, exponent=args.exponent)
    sigma = math.sqrt((2 / 3) * (1 / 3) / args.trials)
    ok = res.probability >= 2 / 3 - 3 * sigma
    print(f"radius={res.radius:.6g} probability={res.probability:.4f} "
          f"center_rate={res.center_rate:.4f} {'PASS' if ok else 'MISS'}")
    return EXIT_OK if ok else EXIT_MISSED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="track", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a multi-trial tracking experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="find the smallest copy-count constant")
    p.add_argument("--config", required=True)
    p.add_argument("--target", type=float, default=0.9)
    p.add_argument("--grid", help="comma separated constants (default 1,2,4,8,16)")
    p.add_argument("--no-write", action="store_true", help="do not update the config file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="minimal copies versus stream length")
    p.add_argument("--config", required=True)
    p.add_argument("--lengths", type=_lengths, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--target", type=float, default=0.9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a generated stream file")
    p.add_argument("--family", choices=["zipf", "uniform", "cash-hard", "turnstile-hard"],
                   required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--m", type=int, default=100_000)
    p.add_argument("--skew", type=float, default=1.1)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ball-stability", help="sampled neighbourhood-stability experiment")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--radius-coeff", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--exponent", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ball)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        return _usage(str(exc))


if __name__ == "__main__":
    sys.exit(main())
