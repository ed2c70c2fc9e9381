"""Calibrate the copy-count constant for the AMS and stable trackers.

Writes the smallest grid constant reaching the target success rate into
src/fptrack/data/calibration.txt (and into each reference config).
"""

import argparse
from pathlib import Path

from fptrack.harness import CALIBRATION_GRID, ExperimentConfig, calibrate_constant, update_keyvalues

ROOT = Path(__file__).resolve().parents[1]
REFERENCES = {"ams": ROOT / "configs" / "ams_zipf.cfg",
              "stable": ROOT / "configs" / "stable_p15.cfg"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", type=float, default=0.9)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    table = ROOT / "src" / "fptrack" / "data" / "calibration.txt"
    for sketch, path in REFERENCES.items():
        cfg = ExperimentConfig.load(path).replace(trials=args.trials, workers=args.workers)
        res = calibrate_constant(cfg, args.target, CALIBRATION_GRID)
        for C, rate in res.rates.items():
            print(f"{sketch}: C={C:g} success={rate:.3f}")
        if not res.ok:
            print(f"{sketch}: no grid constant reached {args.target}; best {res.best}")
            continue
        update_keyvalues(path, {"constant": int(res.constant)})
        update_keyvalues(table, {
            f"{sketch}_constant": int(res.constant),
            f"{sketch}_trials": res.trials,
            f"{sketch}_success": res.rates[res.constant],
            f"{sketch}_reference": path.relative_to(ROOT),
        })


if __name__ == "__main__":
    main()
