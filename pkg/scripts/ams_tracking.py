"""All-times F_2 tracking with the log-factor copy count, Zipf and uniform streams."""

import argparse
from pathlib import Path

from fptrack.harness import ExperimentConfig, calibrated_constant, run_experiment

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "ams_zipf.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args()

    base = ExperimentConfig.load(CONFIG).replace(
        trials=args.trials, workers=args.workers, constant=calibrated_constant("ams"))
    for source in ("zipf", "uniform"):
        out = Path(args.out_dir) / f"ams_{source}.csv"
        rep = run_experiment(base.replace(stream=source, output=str(out)))
        print(f"{source}: {rep.summary()}  -> {out}")


if __name__ == "__main__":
    main()
