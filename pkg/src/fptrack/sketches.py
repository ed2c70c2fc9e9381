"""Linear one-shot sketches (AMS for F_2, p-stable for F_p) and a Morris counter."""

from __future__ import annotations

import math

import numpy as np

from .hashing import HashFamily, hash64, new_family
from .stable_dist import DEFAULT_TABLE, ScaleTable, lower_quantile, median_scale, stable_from_bases
from .stream_model import FrequencyVector, StreamEvent, StreamMode, apply_event, exact_moment


def _aggregate(items, deltas) -> tuple[np.ndarray, np.ndarray]:
    """Distinct items and their summed weights."""
    items = np.asarray(items, dtype=np.int64)
    ids, inverse = np.unique(items, return_inverse=True)
    w = np.zeros(len(ids), dtype=np.int64)
    np.add.at(w, inverse, np.asarray(deltas, dtype=np.int64))
    return ids, w


def ams_buckets(eps: float) -> int:
    """Bucket count k = ceil(16 / eps^2) giving a constant-probability eps-estimate."""
    return math.ceil(16.0 / (eps * eps))


class AmsSketch:
    """k signed counters c_j = sum_{h(i)=j} f_i g(i); estimate sum_j c_j^2.

    ``g`` is a 4-wise independent sign hash and ``h`` a pairwise independent
    bucket hash, both derived from ``seed``.  Counters are exact int64.
    """

    def __init__(self, k: int, seed: int, universe: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = int(k)
        self.seed = int(seed)
        self.universe = int(universe)
        self.sign_hash: HashFamily = new_family(hash64(seed, "sign"), 4, universe, 2)
        self.bucket_hash: HashFamily = new_family(hash64(seed, "bucket"), 2, universe, k)
        self.counters = np.zeros(self.k, dtype=np.int64)

    def sign(self, item: int) -> int:
        return -1 if self.sign_hash.value(item) & 1 else 1

    def bucket(self, item: int) -> int:
        return self.bucket_hash.value(item) % self.k

    def update(self, item: int, delta: int = 1):
        if not 0 <= item < self.universe:
            raise IndexError(f"item {item} outside universe [0, {self.universe})")
        self.counters[self.bucket(item)] += delta * self.sign(item)

    def update_event(self, e: StreamEvent):
        self.update(e.item, e.delta * e.repeat)

    def update_many(self, items, deltas):
        """Batch update; identical result to per-item :meth:`update` calls."""
        ids, w = _aggregate(items, deltas)
        if len(ids) and (ids[0] < 0 or ids[-1] >= self.universe):
            raise IndexError("item outside universe")
        np.add.at(self.counters, self.bucket_hash.buckets(ids), w * self.sign_hash.signs(ids))

    def estimate(self) -> float:
        return float(sum(c * c for c in self.counters.tolist()))

    def compatible(self, other: "AmsSketch") -> bool:
        return (self.k, self.seed, self.universe) == (other.k, other.seed, other.universe)

    def copy_empty(self) -> "AmsSketch":
        return AmsSketch(self.k, self.seed, self.universe)

    def __eq__(self, other):
        if not isinstance(other, AmsSketch):
            return NotImplemented
        return self.compatible(other) and np.array_equal(self.counters, other.counters)

    def dumps(self) -> str:
        head = f"ams {self.k} {self.seed} {self.universe}"
        return head + "\n" + " ".join(str(c) for c in self.counters.tolist()) + "\n"

    @classmethod
    def loads(cls, text: str) -> "AmsSketch":
        lines = text.strip().splitlines()
        tag, k, seed, universe = lines[0].split()
        if tag != "ams":
            raise ValueError("not an AMS sketch dump")
        sk = cls(int(k), int(seed), int(universe))
        vals = [int(v) for v in lines[1].split()] if len(lines) > 1 else []
        if len(vals) != sk.k:
            raise ValueError("counter count does not match k")
        sk.counters[:] = vals
        return sk


def ams_update(s: AmsSketch, item: int, delta: int):
    s.update(item, delta)


def ams_estimate(s: AmsSketch) -> float:
    return s.estimate()


def ams_merge(a: AmsSketch, b: AmsSketch) -> AmsSketch:
    if not a.compatible(b):
        raise ValueError("cannot merge AMS sketches with different k, seed or universe")
    out = a.copy_empty()
    out.counters = a.counters + b.counters
    return out


def ams_matrix(s: AmsSketch, dim: int) -> np.ndarray:
    """H_ij = g(i) g(j) [h(i) = h(j)] over the first ``dim`` universe items."""
    idx = np.arange(dim)
    g = s.sign_hash.signs(idx)
    h = s.bucket_hash.buckets(idx)
    return np.outer(g, g) * (h[:, None] == h[None, :])


def ams_ratio(x, s: AmsSketch) -> float:
    """Approximation ratio x^T H x / x^T x of the sketch with hashes of ``s``."""
    x = np.asarray(x, dtype=np.float64)
    xx = float(x @ x)
    if xx == 0.0:
        raise ValueError("approximation ratio undefined at the zero vector")
    H = ams_matrix(s, len(x))
    return float(x @ H @ x) / xx


class StableSketch:
    """y = A f with A_{j,i} a standard p-stable draw regenerated from (seed, j, i).

    The moment estimate is (quantile_s |y| / scale(p, s)) ** p.
    """

    def __init__(self, rows: int, p: float, seed: int, universe: int, s: float = 0.5,
                 scale_table: ScaleTable | None = None):
        if rows < 1:
            raise ValueError("rows must be >= 1")
        if not 0 < p <= 2:
            raise ValueError("p must lie in (0, 2]")
        self.rows = int(rows)
        self.p = float(p)
        self.seed = int(seed)
        self.universe = int(universe)
        self.s = float(s)
        self.scale = median_scale(self.p, self.s,
                                  table=DEFAULT_TABLE if scale_table is None else scale_table)
        self.row_bases = np.array([hash64(hash64(seed, j), "stable") for j in range(self.rows)],
                                  dtype=np.uint64)
        self.y = np.zeros(self.rows, dtype=np.float64)
        self._columns: dict[int, np.ndarray] = {}

    def column(self, item: int) -> np.ndarray:
        col = self._columns.get(item)
        if col is None:
            col = stable_from_bases(self.p, self.row_bases, item)
            if len(self._columns) < 1 << 16:
                self._columns[item] = col
        return col

    def matrix(self, items) -> np.ndarray:
        """Dense (rows, len(items)) block of A."""
        items = np.asarray(items, dtype=np.uint64)
        return stable_from_bases(self.p, self.row_bases[:, None], items[None, :])

    def update(self, item: int, delta: int = 1):
        if not 0 <= item < self.universe:
            raise IndexError(f"item {item} outside universe [0, {self.universe})")
        self.y += delta * self.column(item)

    def update_event(self, e: StreamEvent):
        self.update(e.item, e.delta * e.repeat)

    def update_many(self, items, deltas):
        """Batch update; equal to per-item :meth:`update` calls up to rounding."""
        ids, w = _aggregate(items, deltas)
        if len(ids) and (ids[0] < 0 or ids[-1] >= self.universe):
            raise IndexError("item outside universe")
        self.y += self.matrix(ids) @ w.astype(np.float64)

    def norm_estimate(self) -> float:
        return float(lower_quantile(np.abs(self.y), self.s)) / self.scale

    def estimate(self) -> float:
        return self.norm_estimate() ** self.p

    def compatible(self, other: "StableSketch") -> bool:
        return ((self.rows, self.p, self.seed, self.universe, self.s)
                == (other.rows, other.p, other.seed, other.universe, other.s))

    def copy_empty(self) -> "StableSketch":
        out = StableSketch.__new__(StableSketch)
        out.__dict__.update(self.__dict__)
        out.y = np.zeros(self.rows)
        out._columns = self._columns
        return out

    def dumps(self) -> str:
        head = f"stable {self.rows} {self.p!r} {self.seed} {self.universe} {self.s!r}"
        return head + "\n" + " ".join(repr(float(v)) for v in self.y) + "\n"

    @classmethod
    def loads(cls, text: str) -> "StableSketch":
        lines = text.strip().splitlines()
        tag, rows, p, seed, universe, s = lines[0].split()
        if tag != "stable":
            raise ValueError("not a stable sketch dump")
        sk = cls(int(rows), float(p), int(seed), int(universe), float(s))
        vals = [float(v) for v in lines[1].split()] if len(lines) > 1 else []
        if len(vals) != sk.rows:
            raise ValueError("accumulator count does not match rows")
        sk.y[:] = vals
        return sk


def stable_update(s: StableSketch, item: int, delta: int):
    s.update(item, delta)


def stable_estimate(s: StableSketch) -> float:
    return s.estimate()


def stable_merge(a: StableSketch, b: StableSketch) -> StableSketch:
    if not a.compatible(b):
        raise ValueError("cannot merge stable sketches with different parameters")
    out = a.copy_empty()
    out.y = a.y + b.y
    return out


class OracleSketch:
    """Test double with the sketch interface that reports the exact moment."""

    def __init__(self, p: float, universe: int, seed: int = 0):
        self.p = float(p)
        self.seed = seed
        self.universe = universe
        self.f = FrequencyVector(universe)

    def update(self, item: int, delta: int = 1):
        apply_event(self.f, StreamEvent(item, 1 if delta > 0 else -1, abs(delta)),
                    StreamMode.TURNSTILE)

    def update_event(self, e: StreamEvent):
        apply_event(self.f, e, StreamMode.TURNSTILE)

    def estimate(self) -> float:
        return exact_moment(self.f, self.p)


class MorrisCounter:
    """Approximate counter storing only the exponent register X.

    Each increment bumps X with probability base^-X; the estimate
    (base^X - 1) / (base - 1) is unbiased.
    """

    def __init__(self, base: float = 2.0, seed: int | None = None,
                 rng: np.random.Generator | None = None):
        if base <= 1:
            raise ValueError("base must exceed 1")
        self.base = float(base)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.register = 0

    def increment(self, times: int = 1):
        # Skip ahead: the wait until X advances is geometric with rate base^-X,
        # so `times` increments cost O(X) draws instead of O(times).
        remaining = int(times)
        while remaining > 0:
            wait = int(self.rng.geometric(self.base ** -self.register))
            if wait > remaining:
                break
            self.register += 1
            remaining -= wait

    def estimate(self) -> float:
        return (self.base ** self.register - 1.0) / (self.base - 1.0)


def morris_increment(c: MorrisCounter, times: int = 1):
    c.increment(times)


def morris_estimate(c: MorrisCounter) -> float:
    return c.estimate()
