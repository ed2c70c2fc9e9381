"""Minimal copy count versus stream length, against the log2(m) baseline."""

import argparse
from pathlib import Path

from fptrack.harness import ExperimentConfig, calibrated_constant, scaling_sweep, sweep_csv

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "ams_zipf.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lengths", default="1e3,1e4,1e5,1e6")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--target", type=float, default=0.9)
    ap.add_argument("--stream", default="zipf", choices=["zipf", "uniform"])
    ap.add_argument("--out", default="scaling_sweep.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig.load(CONFIG).replace(stream=args.stream,
                                                constant=calibrated_constant("ams"))
    lengths = [int(float(x)) for x in args.lengths.split(",")]
    text = sweep_csv(scaling_sweep(cfg, lengths, trials=args.trials, target=args.target))
    Path(args.out).write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
