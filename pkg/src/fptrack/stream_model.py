"""Stream events, frequency vectors and the exact frequency-moment oracle.

Streams are stored column-wise (items / deltas / repeats as int64 arrays) so
that benign workloads of 10^6 updates stay cheap; iterating a :class:`Stream`
yields :class:`StreamEvent` values for code that wants one event at a time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class StreamMode(enum.Enum):
    CASH_REGISTER = "cash"
    TURNSTILE = "turnstile"

    @classmethod
    def parse(cls, text: str) -> "StreamMode":
        text = text.strip().lower()
        for mode in cls:
            if text == mode.value or text == mode.name.lower():
                return mode
        raise ValueError(f"unknown stream mode {text!r}")


@dataclass(frozen=True)
class StreamEvent:
    item: int
    delta: int = 1
    repeat: int = 1

    def __post_init__(self):
        if self.delta not in (1, -1):
            raise ValueError(f"delta must be +1 or -1, got {self.delta}")
        if self.repeat < 1:
            raise ValueError(f"repeat must be >= 1, got {self.repeat}")
        if self.item < 0:
            raise ValueError(f"item must be non-negative, got {self.item}")


class FrequencyVector:
    """Sparse item -> signed count map over a universe of size ``n``.

    Zero entries are never stored, so ``len(counts)`` is always F_0.
    """

    __slots__ = ("universe_size", "counts")

    def __init__(self, universe_size: int, counts: dict[int, int] | None = None):
        if universe_size < 1:
            raise ValueError("universe_size must be >= 1")
        self.universe_size = int(universe_size)
        self.counts: dict[int, int] = {}
        for item, c in (counts or {}).items():
            if not 0 <= item < universe_size:
                raise ValueError(f"item {item} outside universe [0, {universe_size})")
            if c:
                self.counts[int(item)] = int(c)

    def copy(self) -> "FrequencyVector":
        out = FrequencyVector(self.universe_size)
        out.counts = dict(self.counts)
        return out

    def __eq__(self, other):
        if not isinstance(other, FrequencyVector):
            return NotImplemented
        return self.universe_size == other.universe_size and self.counts == other.counts

    def __repr__(self):
        return f"FrequencyVector(n={self.universe_size}, counts={self.counts})"

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.universe_size, dtype=np.int64)
        for item, c in self.counts.items():
            out[item] = c
        return out

    def apply(self, event: StreamEvent, mode: StreamMode) -> "FrequencyVector":
        apply_event(self, event, mode)
        return self


def apply_event(f: FrequencyVector, e: StreamEvent, mode: StreamMode) -> FrequencyVector:
    """Apply ``e`` to ``f`` in place and return ``f``."""
    if e.item >= f.universe_size:
        raise ValueError(f"item {e.item} outside universe of size {f.universe_size}")
    if mode is StreamMode.CASH_REGISTER and e.delta != 1:
        raise ValueError("negative update in cash-register mode")
    c = f.counts.get(e.item, 0) + e.delta * e.repeat
    if c:
        f.counts[e.item] = c
    else:
        f.counts.pop(e.item, None)
    return f


def exact_moment(f: FrequencyVector, p: float) -> float:
    """F_p = sum |f_i|^p over nonzero entries (integer-exact for p = 2)."""
    if p <= 0:
        raise ValueError("p must be positive")
    if p == 2:
        return float(sum(c * c for c in f.counts.values()))
    if p == 1:
        return float(l1_norm(f))
    return math.fsum(abs(c) ** p for c in f.counts.values())


def distinct_count(f: FrequencyVector) -> int:
    return len(f.counts)


def l1_norm(f: FrequencyVector) -> int:
    return sum(abs(c) for c in f.counts.values())


def l2_norm(f: FrequencyVector) -> float:
    return math.sqrt(sum(c * c for c in f.counts.values()))


@dataclass
class Stream:
    """A run-length encoded update stream over ``[0, universe_size)``."""

    mode: StreamMode
    universe_size: int
    items: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    deltas: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    repeats: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.items = np.asarray(self.items, dtype=np.int64)
        m = len(self.items)
        self.deltas = (np.ones(m, dtype=np.int64) if len(self.deltas) == 0 and m
                       else np.asarray(self.deltas, dtype=np.int64))
        self.repeats = (np.ones(m, dtype=np.int64) if len(self.repeats) == 0 and m
                        else np.asarray(self.repeats, dtype=np.int64))
        if not (len(self.deltas) == len(self.repeats) == m):
            raise ValueError("items, deltas and repeats must have equal length")
        self.validate()

    def validate(self):
        if len(self.items) == 0:
            return
        if self.items.min() < 0 or self.items.max() >= self.universe_size:
            raise ValueError("stream item outside universe")
        if np.any((self.deltas != 1) & (self.deltas != -1)):
            raise ValueError("deltas must be +1 or -1")
        if np.any(self.repeats < 1):
            raise ValueError("repeats must be >= 1")
        if self.mode is StreamMode.CASH_REGISTER and np.any(self.deltas != 1):
            raise ValueError("negative update in cash-register mode")

    @classmethod
    def from_events(cls, events: Iterable[StreamEvent], mode: StreamMode,
                    universe_size: int) -> "Stream":
        events = list(events)
        return cls(
            mode,
            universe_size,
            np.array([e.item for e in events], dtype=np.int64),
            np.array([e.delta for e in events], dtype=np.int64),
            np.array([e.repeat for e in events], dtype=np.int64),
        )

    def __len__(self):
        return len(self.items)

    def __iter__(self) -> Iterator[StreamEvent]:
        for i, d, r in zip(self.items.tolist(), self.deltas.tolist(), self.repeats.tolist()):
            yield StreamEvent(i, d, r)

    def __getitem__(self, idx) -> "Stream":
        if not isinstance(idx, slice):
            raise TypeError("Stream supports slicing only")
        return Stream(self.mode, self.universe_size, self.items[idx],
                      self.deltas[idx], self.repeats[idx])

    def __add__(self, other: "Stream") -> "Stream":
        if other.mode is not self.mode or other.universe_size != self.universe_size:
            raise ValueError("cannot concatenate streams of different mode/universe")
        return Stream(self.mode, self.universe_size,
                      np.concatenate([self.items, other.items]),
                      np.concatenate([self.deltas, other.deltas]),
                      np.concatenate([self.repeats, other.repeats]))

    @property
    def mass(self) -> int:
        """Total applied |delta| * repeat (the stream length m in unit updates)."""
        return int(self.repeats.sum())

    def expand(self) -> "Stream":
        """Unroll run-length events into unit updates."""
        return Stream(self.mode, self.universe_size,
                      np.repeat(self.items, self.repeats),
                      np.repeat(self.deltas, self.repeats),
                      np.ones(self.mass, dtype=np.int64))

    def frequency_vector(self) -> FrequencyVector:
        if self.mass < (1 << 62):
            # events were validated on construction; int64 sums cannot overflow here
            ids, inverse = np.unique(self.items, return_inverse=True)
            sums = np.zeros(len(ids), dtype=np.int64)
            np.add.at(sums, inverse, self.deltas * self.repeats)
            keep = sums != 0
            return FrequencyVector(self.universe_size,
                                   dict(zip(ids[keep].tolist(), sums[keep].tolist())))
        f = FrequencyVector(self.universe_size)
        for e in self:
            apply_event(f, e, self.mode)
        return f

    def prefix_vectors(self) -> Iterator[FrequencyVector]:
        """Yield the frequency vector after every event (shared, mutated object)."""
        f = FrequencyVector(self.universe_size)
        for e in self:
            yield apply_event(f, e, self.mode)


def write_stream(path: str | Path, stream: Stream, comment: str | None = None):
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"mode {stream.mode.value}\n")
        fh.write(f"n {stream.universe_size}\n")
        for i, d, r in zip(stream.items.tolist(), stream.deltas.tolist(),
                           stream.repeats.tolist()):
            fh.write(f"{i} {d} {r}\n")


def read_stream(path: str | Path) -> Stream:
    mode = None
    n = None
    items, deltas, repeats = [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "mode":
                mode = StreamMode.parse(parts[1])
            elif parts[0] == "n":
                n = int(parts[1])
            else:
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected '<item> <delta> <repeat>'")
                items.append(int(parts[0]))
                deltas.append(int(parts[1]))
                repeats.append(int(parts[2]))
    if mode is None or n is None:
        raise ValueError(f"{path}: missing 'mode' or 'n' header")
    return Stream(mode, n, np.array(items, dtype=np.int64),
                  np.array(deltas, dtype=np.int64), np.array(repeats, dtype=np.int64))
