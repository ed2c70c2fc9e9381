"""Multi-trial experiments: configs, aggregation, calibration and scaling sweeps."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .hard_instances import gen_uniform, gen_zipf
from .hashing import hash64
from .sketches import ams_buckets
from .stream_model import Stream, read_stream
from .tracker import (Tracker, TrackReport, copies_for_tracking, evaluate_tracking, naive_copies,
                      stable_rows_for_tracking)

DEFAULT_CONSTANT = 8.0
CALIBRATION_GRID = (1.0, 2.0, 4.0, 8.0, 16.0)


def read_keyvalues(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def update_keyvalues(path: str | Path, updates: dict[str, object]):
    """Rewrite ``key = value`` lines in place, appending keys that are missing."""
    path = Path(path)
    lines = path.read_text().splitlines() if path.exists() else []
    pending = dict(updates)
    for i, raw in enumerate(lines):
        body = raw.split("#", 1)[0]
        if "=" in body:
            key = body.split("=", 1)[0].strip()
            if key in pending:
                lines[i] = f"{key} = {pending.pop(key)}"
    lines += [f"{k} = {v}" for k, v in pending.items()]
    path.write_text("\n".join(lines) + "\n")


def calibrated_constants() -> dict[str, str]:
    try:
        text = resources.files("fptrack").joinpath("data/calibration.txt").read_text()
    except FileNotFoundError:
        return {}
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def calibrated_constant(sketch: str) -> float:
    value = calibrated_constants().get(f"{sketch}_constant")
    return float(value) if value is not None else DEFAULT_CONSTANT


@dataclass
class ExperimentConfig:
    stream: str = "zipf"               # zipf | uniform | file
    stream_file: str | None = None
    n: int = 1024
    m: int = 100_000
    skew: float = 1.1
    sketch: str = "ams"                # ams | stable | oracle
    p: float = 2.0
    eps: float = 0.25
    copy_policy: str = "theorem"       # explicit | theorem | naive
    copies: int = 1
    rows: int | None = None
    buckets: int | None = None
    constant: float | None = None      # None: calibrated value for the sketch
    trials: int = 1
    seed: int = 0
    checkpoint_policy: str = "event_boundaries"
    epoch_exponent: float = 1.5
    target: float = 0.5
    output: str | None = None
    trace: str | None = None
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not 0 < self.p <= 2:
            raise ValueError("p must lie in (0, 2]")
        if self.stream not in ("zipf", "uniform", "file"):
            raise ValueError(f"unknown stream source {self.stream!r}")
        if self.stream == "file" and not self.stream_file:
            raise ValueError("stream = file needs stream_file")
        if self.sketch not in ("ams", "stable", "oracle"):
            raise ValueError(f"unknown sketch {self.sketch!r}")
        if self.sketch == "ams" and self.p != 2:
            raise ValueError("the AMS sketch estimates F_2 only")
        if self.copy_policy not in ("explicit", "theorem", "naive"):
            raise ValueError(f"unknown copy policy {self.copy_policy!r}")

    @property
    def C(self) -> float:
        return calibrated_constant(self.sketch) if self.constant is None else self.constant

    @classmethod
    def from_dict(cls, values: dict[str, str]) -> "ExperimentConfig":
        kwargs = {}
        fields = {f.name: f for f in dataclasses.fields(cls)}
        for key, raw in values.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(fields[key].type, raw)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(read_keyvalues(path))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(type_name, raw: str):
    t = str(type_name)
    if raw.lower() in ("none", "") and "None" in t:
        return None
    if t.startswith("int"):
        return int(float(raw))
    if t.startswith("float"):
        return float(raw)
    return raw


def trial_seed(master_seed: int, trial: int) -> int:
    return hash64(master_seed, trial, "trial")


def load_stream(cfg: ExperimentConfig, trial: int, m: int | None = None) -> Stream:
    m = cfg.m if m is None else m
    seed = hash64(trial_seed(cfg.seed, trial), "stream")
    if cfg.stream == "zipf":
        return gen_zipf(cfg.n, m, cfg.skew, seed)
    if cfg.stream == "uniform":
        return gen_uniform(cfg.n, m, seed)
    try:
        return read_stream(cfg.stream_file)
    except OSError as exc:
        raise ValueError(f"cannot read stream file {cfg.stream_file}: {exc}") from exc


def sketch_shape(cfg: ExperimentConfig, stream: Stream) -> tuple[int, int]:
    """(copies, rows-or-buckets) for a trial under the configured copy policy."""
    F0 = max(1, len(np.unique(stream.items)))
    m = max(2, stream.mass)
    if cfg.sketch == "stable":
        if cfg.copy_policy == "explicit":
            return cfg.copies, cfg.rows or 1
        if cfg.copy_policy == "theorem":
            return 1, stable_rows_for_tracking(F0, m, cfg.eps, cfg.C, cfg.p)
        eps_n = cfg.eps / cfg.p
        return 1, math.ceil(cfg.C / eps_n ** 2 * math.log2(m))
    width = cfg.buckets or ams_buckets(cfg.eps)
    if cfg.copy_policy == "explicit":
        return cfg.copies, width
    if cfg.copy_policy == "theorem":
        return copies_for_tracking(F0, m, cfg.eps, cfg.C), width
    return naive_copies(m, cfg.C), width


def build_tracker(cfg: ExperimentConfig, stream: Stream, master_seed: int,
                  copies: int | None = None) -> Tracker:
    l, width = sketch_shape(cfg, stream)
    l = l if copies is None else copies
    if cfg.sketch == "ams":
        return Tracker.ams(l, width, master_seed, stream.universe_size)
    if cfg.sketch == "stable":
        return Tracker.stable(l, width, cfg.p, master_seed, stream.universe_size)
    return Tracker.oracle(cfg.p, stream.universe_size, l)


@dataclass
class TrialResult:
    trial: int
    seed: int
    copies: int
    width: int
    report: TrackReport
    seconds: float


def run_trial(cfg: ExperimentConfig, trial: int, keep_trace: bool = False) -> TrialResult:
    start = time.perf_counter()
    stream = load_stream(cfg, trial)
    seed = trial_seed(cfg.seed, trial)
    tracker = build_tracker(cfg, stream, seed)
    _, width = sketch_shape(cfg, stream)
    report = evaluate_tracking(stream, cfg.p, cfg.eps, tracker, cfg.checkpoint_policy,
                               keep_trace=keep_trace, epoch_exponent=cfg.epoch_exponent)
    return TrialResult(trial, seed, tracker.l, width, report, time.perf_counter() - start)


def _run_trial_star(args):
    return run_trial(*args)


@dataclass
class AggregateReport:
    trials: list[TrialResult]
    success: list[bool] = field(init=False)

    def __post_init__(self):
        self.success = [t.report.all_times_success for t in self.trials]

    @property
    def n(self) -> int:
        return len(self.trials)

    @property
    def success_fraction(self) -> float:
        return float(np.mean(self.success))

    @property
    def half_width(self) -> float:
        ph = self.success_fraction
        return 3.0 * math.sqrt(ph * (1.0 - ph) / self.n)

    @property
    def max_errors(self) -> np.ndarray:
        return np.array([t.report.max_rel_error for t in self.trials])

    @property
    def mean_max_error(self) -> float:
        return float(self.max_errors.mean())

    @property
    def max_max_error(self) -> float:
        return float(self.max_errors.max())

    @property
    def epochs(self) -> list[int | None]:
        return [t.report.epochs for t in self.trials]

    @property
    def seconds(self) -> list[float]:
        return [t.seconds for t in self.trials]

    def passed(self, target: float) -> bool:
        """Success fraction at least target - 3 sigma (sigma at the target rate)."""
        sigma = math.sqrt(target * (1.0 - target) / self.n)
        return self.success_fraction >= target - 3.0 * sigma

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "seed", "copies", "width", "checkpoints", "all_times_success",
                    "max_rel_error", "max_error_index", "first_violation", "skipped", "epochs"])
        for t in self.trials:
            r = t.report
            w.writerow([t.trial, t.seed, t.copies, t.width, r.checkpoints,
                        int(r.all_times_success), repr(r.max_rel_error),
                        "" if r.max_error_index is None else r.max_error_index,
                        "" if r.first_violation is None else r.first_violation,
                        r.skipped, "" if r.epochs is None else r.epochs])
        return buf.getvalue()

    def summary(self) -> str:
        return (f"trials={self.n} success={self.success_fraction:.4f} "
                f"+/-{self.half_width:.4f} mean_max_err={self.mean_max_error:.4f} "
                f"max_max_err={self.max_max_error:.4f} "
                f"copies={sorted(set(t.copies for t in self.trials))}")


def run_experiment(cfg: ExperimentConfig) -> AggregateReport:
    args = [(cfg, i, cfg.trace is not None and i == 0) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_trial_star, args))
    else:
        results = [run_trial(*a) for a in args]
    report = AggregateReport(results)
    if cfg.output:
        Path(cfg.output).write_text(report.to_csv())
    if cfg.trace:
        results[0].report.write_csv(cfg.trace)
    return report


@dataclass
class CalibrationResult:
    constant: float | None
    target: float
    trials: int
    rates: dict[float, float]

    @property
    def ok(self) -> bool:
        return self.constant is not None

    @property
    def best(self) -> tuple[float, float]:
        c = max(self.rates, key=lambda k: (self.rates[k], -k))
        return c, self.rates[c]


def calibrate_constant(cfg: ExperimentConfig, target: float,
                       grid: Sequence[float] = CALIBRATION_GRID) -> CalibrationResult:
    """Smallest grid constant whose formula copy count reaches ``target`` success."""
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    rates = {}
    for C in grid:
        rep = run_experiment(cfg.replace(copy_policy="theorem", constant=float(C),
                                         output=None, trace=None))
        rates[float(C)] = rep.success_fraction
        if rep.success_fraction >= target:
            return CalibrationResult(float(C), target, cfg.trials, rates)
    return CalibrationResult(None, target, cfg.trials, rates)


@dataclass
class SweepRow:
    m: int
    l_min: int | None
    l_naive: int
    success: float | None


def scaling_sweep(cfg: ExperimentConfig, lengths: Sequence[int], trials: int = 100,
                  target: float = 0.9, max_copies: int | None = None) -> list[SweepRow]:
    """Minimal odd copy count reaching ``target`` all-times success, per length.

    Every trial draws one stream of length max(lengths); shorter lengths are
    its prefixes, and copy c of a tracker is the same sketch whatever ``l``
    is.  A single run per (trial, l) therefore settles all lengths at once
    via the first violation time, and success is nested in m by construction.
    Odd ``l`` is scanned upward from 1, which returns the exact minimum.
    """
    lengths = sorted(int(m) for m in lengths)
    if len(lengths) < 2:
        raise ValueError("a sweep needs at least two stream lengths")
    C = cfg.C
    top = lengths[-1]
    if max_copies is None:
        max_copies = 4 * naive_copies(top, max(C, 1.0)) + 1
    streams = [load_stream(cfg, i, top) for i in range(trials)]
    l_min: dict[int, int | None] = {m: None for m in lengths}
    rate_at: dict[int, float | None] = {m: None for m in lengths}
    l = 1
    while l <= max_copies and any(v is None for v in l_min.values()):
        first_bad = []
        for i, stream in enumerate(streams):
            tracker = build_tracker(cfg, stream, trial_seed(cfg.seed, i), copies=l)
            rep = evaluate_tracking(stream, cfg.p, cfg.eps, tracker, cfg.checkpoint_policy,
                                    keep_trace=False, epoch_exponent=cfg.epoch_exponent)
            first_bad.append(math.inf if rep.first_violation is None else rep.first_violation)
        first_bad = np.array(first_bad)
        for m in lengths:
            if l_min[m] is None:
                rate = float(np.mean(first_bad >= m))
                if rate >= target:
                    l_min[m], rate_at[m] = l, rate
        l += 2
    return [SweepRow(m, l_min[m], math.ceil(math.ceil(math.log2(m)) * C), rate_at[m])
            for m in lengths]


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "l_min", "l_naive", "success_at_l_min"])
    for r in rows:
        w.writerow([r.m, "" if r.l_min is None else r.l_min, r.l_naive,
                    "" if r.success is None else repr(r.success)])
    return buf.getvalue()
