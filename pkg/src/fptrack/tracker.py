"""Median-of-copies tracking estimators and their evaluation.

A :class:`Tracker` feeds every event to ``l`` independent sketch copies and
reports the lower median of the copy estimates.  :func:`evaluate_tracking`
replays a stream and compares the tracker against the exact moment after
every checkpoint; AMS and stable trackers run through compiled kernels, any
other copy type (e.g. the oracle double) through the plain Python loop.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hashing import hash64
from .sketches import AmsSketch, OracleSketch, StableSketch, ams_buckets, ams_merge, stable_merge
from .stream_model import (FrequencyVector, Stream, StreamMode, apply_event,
                           exact_moment, l1_norm)

CHECKPOINT_POLICIES = ("event_boundaries", "every_update")


def next_odd(x: float) -> int:
    n = max(1, math.ceil(x - 1e-12))
    return n if n % 2 else n + 1


def copies_for_tracking(F0_bound: int, m: int, eps: float, C: float) -> int:
    """Odd copy count C * (log2 F0 + log2 log2 m + log2(1/eps)), at least 1."""
    if F0_bound < 1 or m < 2 or not 0 < eps < 1 or C <= 0:
        raise ValueError("need F0_bound >= 1, m >= 2, eps in (0,1), C > 0")
    bits = math.log2(F0_bound) + math.log2(math.log2(m)) + math.log2(1.0 / eps)
    return next_odd(C * bits)


def naive_copies(m: int, C: float) -> int:
    """Union-bound baseline: ceil(log2 m) * C copies (odd)."""
    return next_odd(math.ceil(math.log2(m)) * C)


def stable_rows_for_tracking(F0_bound: int, m: int, eps: float, C: float, p: float) -> int:
    """Rows ceil(C / eps_n^2 * (log2 F0 + log2 log2 m + log2(1/eps))).

    ``eps`` is the requested moment accuracy; the sketch estimates the norm,
    so the leading factor uses the norm accuracy eps_n = eps / p.
    """
    if F0_bound < 1 or m < 2 or not 0 < eps < 1 or C <= 0:
        raise ValueError("need F0_bound >= 1, m >= 2, eps in (0,1), C > 0")
    eps_n = eps / p
    bits = math.log2(F0_bound) + math.log2(math.log2(m)) + math.log2(1.0 / eps)
    return max(1, math.ceil(C / (eps_n * eps_n) * bits - 1e-9))


def lower_median(values: Sequence[float]):
    """Sorted element at index floor((l-1)/2)."""
    if len(values) == 0:
        raise ValueError("median of no estimates")
    return sorted(values)[(len(values) - 1) // 2]


class Tracker:
    """``l`` homogeneous sketch copies with seeds hash64(master_seed, c, "copy")."""

    def __init__(self, copies: list, master_seed: int = 0, kind: str = "custom"):
        if not copies:
            raise ValueError("a tracker needs at least one copy")
        self.copies = list(copies)
        self.master_seed = master_seed
        self.kind = kind

    @staticmethod
    def copy_seed(master_seed: int, c: int) -> int:
        return hash64(master_seed, c, "copy")

    @classmethod
    def ams(cls, l: int, k: int, master_seed: int, universe: int) -> "Tracker":
        return cls([AmsSketch(k, cls.copy_seed(master_seed, c), universe) for c in range(l)],
                   master_seed, "ams")

    @classmethod
    def stable(cls, l: int, rows: int, p: float, master_seed: int, universe: int,
               s: float = 0.5) -> "Tracker":
        return cls([StableSketch(rows, p, cls.copy_seed(master_seed, c), universe, s)
                    for c in range(l)], master_seed, "stable")

    @classmethod
    def oracle(cls, p: float, universe: int, l: int = 1) -> "Tracker":
        return cls([OracleSketch(p, universe) for _ in range(l)], 0, "oracle")

    @property
    def l(self) -> int:
        return len(self.copies)

    def update(self, e):
        for sk in self.copies:
            sk.update_event(e)

    def copy_estimates(self) -> list[float]:
        return [sk.estimate() for sk in self.copies]

    def estimate(self) -> float:
        return lower_median(self.copy_estimates())

    def merge(self, other: "Tracker") -> "Tracker":
        if self.kind != other.kind or self.l != other.l:
            raise ValueError("trackers differ in kind or copy count")
        merge = {"ams": ams_merge, "stable": stable_merge}.get(self.kind)
        if merge is None:
            raise ValueError(f"{self.kind} trackers are not mergeable")
        return Tracker([merge(a, b) for a, b in zip(self.copies, other.copies)],
                       self.master_seed, self.kind)


def tracker_update(t: Tracker, e):
    t.update(e)


def tracker_estimate(t: Tracker) -> float:
    return t.estimate()


@dataclass(frozen=True)
class EpochSchedule:
    """l1-norm thresholds r^j, r = 1 + eps / F0^c; epoch index = #thresholds below ||f||_1."""

    eps: float
    exponent: float
    F0: int

    @property
    def ratio(self) -> float:
        return 1.0 + self.eps / max(self.F0, 1) ** self.exponent

    def thresholds(self, max_l1: float) -> np.ndarray:
        r = self.ratio
        count = int(math.ceil(math.log(max(max_l1, 1.0)) / math.log(r))) + 2
        return r ** np.arange(count, dtype=np.float64)

    def epoch_index(self, l1_values) -> np.ndarray:
        x = np.asarray(l1_values, dtype=np.float64)
        r = self.ratio
        with np.errstate(divide="ignore"):
            j = np.ceil(np.log(np.maximum(x, 1.0)) / math.log1p(r - 1.0))
        j = np.maximum(j, 0.0)
        # repair rounding at exact powers of r
        j = np.where((j > 0) & (r ** (j - 1) >= x), j - 1, j)
        j = np.where(r ** j < x, j + 1, j)
        return j.astype(np.int64)


def epoch_count(stream: Stream, eps: float, c: float) -> int:
    """Number of epoch boundaries crossed by ||f||_1 over a cash-register stream."""
    if stream.mode is not StreamMode.CASH_REGISTER:
        raise ValueError("epochs are defined for cash-register streams only")
    if len(stream) == 0:
        return 0
    F0 = len(np.unique(stream.items))
    final = stream.mass
    return int(EpochSchedule(eps, c, F0).epoch_index([final])[0])


@dataclass
class TrackReport:
    eps: float
    checkpoints: int
    all_times_success: bool
    max_rel_error: float
    max_error_index: int | None
    first_violation: int | None
    skipped: int
    epochs: int | None
    # per-checkpoint trace, present when requested
    l1: np.ndarray | None = None
    exact: np.ndarray | None = None
    estimate: np.ndarray | None = None
    epoch_index: np.ndarray | None = None

    @property
    def rel_error(self) -> np.ndarray | None:
        if self.exact is None:
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.exact > 0, np.abs(self.estimate - self.exact) / self.exact,
                            np.nan)

    def to_csv(self) -> str:
        if self.exact is None:
            raise ValueError("report was produced without a trace")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "l1_norm", "exact", "estimate", "rel_error", "epoch_index"])
        rel = self.rel_error
        for t in range(self.checkpoints):
            w.writerow([t, int(self.l1[t]), repr(float(self.exact[t])),
                        repr(float(self.estimate[t])), repr(float(rel[t])),
                        int(self.epoch_index[t])])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _finish(eps, n_checkpoints, max_rel, argmax, first_bad, skipped, epochs,
            l1=None, exact=None, est=None, epoch_idx=None) -> TrackReport:
    return TrackReport(
        eps=eps,
        checkpoints=n_checkpoints,
        all_times_success=bool(max_rel <= eps),
        max_rel_error=float(max_rel),
        max_error_index=None if argmax < 0 else int(argmax),
        first_violation=None if first_bad < 0 else int(first_bad),
        skipped=int(skipped),
        epochs=epochs,
        l1=l1, exact=exact, estimate=est, epoch_index=epoch_idx,
    )


def _epochs(stream: Stream, eps: float, exponent: float, l1_trace):
    if stream.mode is not StreamMode.CASH_REGISTER or len(stream) == 0:
        return None, (None if l1_trace is None else np.full(len(l1_trace), -1, dtype=np.int64))
    sched = EpochSchedule(eps, exponent, len(np.unique(stream.items)))
    final = int(sched.epoch_index([stream.mass])[0])
    idx = None if l1_trace is None else sched.epoch_index(l1_trace).astype(np.int64)
    return final, idx


def evaluate_tracking(stream: Stream, p: float, eps: float, tracker: Tracker,
                      checkpoint_policy: str = "event_boundaries", keep_trace: bool = True,
                      epoch_exponent: float = 1.5, engine: str = "auto") -> TrackReport:
    """Replay ``stream`` into ``tracker`` and score it at every checkpoint.

    ``event_boundaries`` scores after each (run-length) event;
    ``every_update`` unrolls repeats first so every unit update is scored.
    Checkpoints whose exact moment is 0 are skipped and counted.  The tracker
    is consumed (its copies end in the final state) only on the Python
    engine; the compiled engines leave it untouched.
    """
    if checkpoint_policy not in CHECKPOINT_POLICIES:
        raise ValueError(f"unknown checkpoint policy {checkpoint_policy!r}")
    if len(stream) == 0:
        raise ValueError("cannot evaluate tracking on an empty stream")
    if checkpoint_policy == "every_update":
        stream = stream.expand()
    if engine == "auto":
        engine = "compiled" if _compiled_ok(stream, tracker, p) else "python"
    if engine == "compiled":
        return _evaluate_compiled(stream, p, eps, tracker, keep_trace, epoch_exponent)
    return _evaluate_python(stream, p, eps, tracker, keep_trace, epoch_exponent)


def _compiled_ok(stream: Stream, tracker: Tracker, p: float) -> bool:
    if tracker.kind == "ams":
        # int64 kernel: the largest possible F_2 must stay below 2^62
        return p == 2 and stream.mass < (1 << 31)
    return tracker.kind == "stable" and tracker.copies[0].p == p


def _evaluate_python(stream, p, eps, tracker, keep_trace, epoch_exponent) -> TrackReport:
    m = len(stream)
    f = FrequencyVector(stream.universe_size)
    l1 = np.zeros(m, dtype=np.int64) if keep_trace else None
    ex = np.zeros(m) if keep_trace else None
    est = np.zeros(m) if keep_trace else None
    max_rel, argmax, first_bad, skipped = 0.0, -1, -1, 0
    for t, e in enumerate(stream):
        apply_event(f, e, stream.mode)
        tracker.update(e)
        exact = exact_moment(f, p)
        value = tracker.estimate()
        if keep_trace:
            l1[t] = l1_norm(f)
            ex[t] = exact
            est[t] = value
        if exact == 0:
            skipped += 1
            continue
        rel = abs(value - exact) / exact
        if argmax < 0 or rel > max_rel:
            max_rel, argmax = rel, t
        if rel > eps and first_bad < 0:
            first_bad = t
    epochs, idx = _epochs(stream, eps, epoch_exponent, l1)
    return _finish(eps, m, max_rel, argmax, first_bad, skipped, epochs, l1, ex, est, idx)


def _evaluate_compiled(stream, p, eps, tracker, keep_trace, epoch_exponent) -> TrackReport:
    from . import _kernels

    m = len(stream)
    distinct, ids = np.unique(stream.items, return_inverse=True)
    ids = ids.astype(np.int64)
    weights = stream.deltas * stream.repeats
    n_out = m if keep_trace else 0
    est = np.zeros(n_out)
    ex = np.zeros(n_out)
    l1 = np.zeros(n_out, dtype=np.int64)
    if tracker.kind == "ams":
        signs = np.stack([sk.sign_hash.signs(distinct) for sk in tracker.copies])
        buckets = np.stack([sk.bucket_hash.buckets(distinct) for sk in tracker.copies])
        k = tracker.copies[0].k
        res = _kernels.ams_track(ids, weights, signs, buckets, k, float(eps), keep_trace,
                                 est, ex, l1)
    else:
        first = tracker.copies[0]
        cols = np.concatenate([sk.matrix(distinct) for sk in tracker.copies], axis=0)
        cols = np.ascontiguousarray(cols.T)
        s_index = int(math.floor(first.s * (first.rows - 1)))
        res = _kernels.stable_track(ids, weights, cols, tracker.l, first.rows, first.p,
                                    s_index, first.scale, float(eps), keep_trace, est, ex, l1)
    max_rel, argmax, first_bad, skipped = res
    epochs, idx = _epochs(stream, eps, epoch_exponent, l1 if keep_trace else None)
    if not keep_trace:
        est = ex = l1 = None
    return _finish(eps, m, max_rel, argmax, first_bad, skipped, epochs, l1, ex, est, idx)


@dataclass
class BallStability:
    probability: float
    center_rate: float
    radius: float
    trials: int
    samples_per_ball: int
    successes: list[bool] = field(default_factory=list, repr=False)


def sample_l1_ball(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """``count`` points uniform in the unit l1 ball of R^dim."""
    e = rng.exponential(size=(count, dim + 1))
    signs = rng.choice(np.array([-1.0, 1.0]), size=(count, dim))
    return signs * e[:, :dim] / e.sum(axis=1, keepdims=True)


def ball_stability_experiment(center, eps: float, radius_coeff: float, trials: int,
                              samples_per_ball: int, seed: int = 0,
                              exponent: float = 1.5, k: int | None = None) -> BallStability:
    """Fraction of AMS hash draws accurate at every sampled point of an l1 ball.

    The ball is centred at ``center``, restricted to its support, with radius
    radius_coeff * ||center||_1 * eps / F0^exponent.  The centre itself is
    always one of the checked points.
    """
    a = np.asarray(center, dtype=np.float64)
    support = np.flatnonzero(a)
    if support.size == 0:
        raise ValueError("ball centre must be nonzero")
    k = ams_buckets(eps) if k is None else k
    F0 = support.size
    radius = radius_coeff * float(np.abs(a).sum()) * eps / F0 ** exponent
    successes = []
    center_ok = 0
    for t in range(trials):
        sk = AmsSketch(k, hash64(seed, t, "trial"), len(a))
        g = sk.sign_hash.signs(support).astype(np.float64)
        h = sk.bucket_hash.buckets(support)
        M = np.zeros((F0, k))
        M[np.arange(F0), h] = g
        rng = np.random.default_rng(hash64(seed, t, "ball"))
        pts = a[support] + radius * sample_l1_ball(rng, F0, samples_per_ball)
        pts = np.vstack([a[support], pts])
        ratio = ((pts @ M) ** 2).sum(axis=1) / (pts ** 2).sum(axis=1)
        ok = np.abs(ratio - 1.0) <= eps
        center_ok += bool(ok[0])
        successes.append(bool(ok.all()))
    return BallStability(float(np.mean(successes)), center_ok / trials, radius, trials,
                         samples_per_ball, successes)
