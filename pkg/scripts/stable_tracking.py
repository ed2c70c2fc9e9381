"""All-times F_1.5 tracking with a single p-stable sketch sized by the row formula."""

import argparse
from pathlib import Path

from fptrack.harness import ExperimentConfig, calibrated_constant, run_experiment

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "stable_p15.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="stable_tracking.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig.load(CONFIG).replace(
        trials=args.trials, p=args.p, workers=args.workers, output=args.out,
        constant=calibrated_constant("stable"))
    rep = run_experiment(cfg)
    print(f"rows={rep.trials[0].width} {rep.summary()}  -> {args.out}")


if __name__ == "__main__":
    main()
