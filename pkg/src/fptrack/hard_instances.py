"""Benign workloads and the adversarial streams from the lower-bound reductions.

Adversarial items are pairs (position i in 1..N, symbol in 1..k), flattened
row-major to the universe index (i - 1) * k + (symbol - 1) over a universe of
size N * k.

Cash-register family (p != 1): t = 2^(2p) / |2^(p-1) - 1|, q = t^(1/p).  Phase
j inserts floor(q^i) copies of (i, x_i) for v'_{j-1} < i <= v'_j and then
floor(q^v'_j) copies of (v'_j, y'_j); the vector at the end of phase j is the
one player j must classify.

Turnstile family: q = 2^(1/p).  Phase i builds f(a_{<=t}), deletes floor(q^t)
copies of (t, q_i), then replays everything negated so the vector returns to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .stream_model import FrequencyVector, Stream, StreamMode, exact_moment

MAX_REPEAT = 1 << 62


@dataclass(frozen=True)
class HardParams:
    p: float
    t: float | None
    q: float
    N: int
    k: int
    family: str

    @property
    def universe(self) -> int:
        return self.N * self.k

    def item(self, position: int, symbol: int) -> int:
        if not (1 <= position <= self.N and 1 <= symbol <= self.k):
            raise ValueError(f"pair ({position}, {symbol}) outside [N]x[k]")
        return (position - 1) * self.k + (symbol - 1)

    def copies(self, i: int) -> int:
        c = math.floor(self.q ** i)
        if c >= MAX_REPEAT:
            raise OverflowError(f"floor(q^{i}) does not fit a 62-bit repeat count")
        return c


def hard_params(p: float, family: str, N: int = 1, k: int = 1) -> HardParams:
    if not 0 < p <= 2:
        raise ValueError("p must lie in (0, 2]")
    if family == "cash":
        gap = abs(2.0 ** (p - 1) - 1.0)
        if gap == 0.0:
            raise ValueError("cash-register construction is undefined at p = 1")
        t = 2.0 ** (2 * p) / gap
        return HardParams(p, t, t ** (1.0 / p), N, k, family)
    if family == "turnstile":
        return HardParams(p, None, 2.0 ** (1.0 / p), N, k, family)
    raise ValueError(f"unknown family {family!r}")


def gap_threshold(p: float) -> float:
    """Accuracy |2^p - 2| / 2^(p+3) that separates planted from unplanted."""
    return abs(2.0 ** p - 2.0) / 2.0 ** (p + 3)


@dataclass(frozen=True)
class HardInstanceInput:
    """x in [k]^N, k distinct positions v, symbols y (all 1-based)."""

    x: tuple[int, ...]
    v: tuple[int, ...]
    y: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.v)) != len(self.v):
            raise ValueError("positions v must be distinct")
        if len(self.v) != len(self.y):
            raise ValueError("v and y must have equal length")

    @property
    def planted(self) -> tuple[bool, ...]:
        return tuple(self.x[vj - 1] == yj for vj, yj in zip(self.v, self.y))

    def sorted(self) -> "HardInstanceInput":
        order = sorted(range(len(self.v)), key=lambda j: self.v[j])
        return HardInstanceInput(self.x, tuple(self.v[j] for j in order),
                                 tuple(self.y[j] for j in order))


def random_hard_input(rng: np.random.Generator, N: int, k: int, players: int | None = None,
                      planted: Sequence[bool] | None = None) -> HardInstanceInput:
    players = k if players is None else players
    x = tuple(int(s) for s in rng.integers(1, k + 1, size=N))
    v = tuple(int(i) for i in rng.choice(np.arange(1, N + 1), size=players, replace=False))
    y = []
    for j, vj in enumerate(v):
        plant = bool(rng.integers(2)) if planted is None else planted[j]
        if plant or k == 1:
            y.append(x[vj - 1])
        else:
            others = [s for s in range(1, k + 1) if s != x[vj - 1]]
            y.append(int(rng.choice(others)))
    return HardInstanceInput(x, v, tuple(y))


@dataclass
class HardStream:
    stream: Stream
    checkpoints: list[tuple[int, int]]     # (index of last event, phase)

    def vector_at(self, event_index: int) -> FrequencyVector:
        return self.stream[: event_index + 1].frequency_vector()

    def checkpoint_vectors(self) -> list[FrequencyVector]:
        return [self.vector_at(e) for e, _ in self.checkpoints]


class _Builder:
    def __init__(self, params: HardParams):
        self.params = params
        self.items: list[int] = []
        self.deltas: list[int] = []
        self.repeats: list[int] = []

    def add(self, position, symbol, delta, repeat):
        if repeat <= 0:
            return
        self.items.append(self.params.item(position, symbol))
        self.deltas.append(delta)
        self.repeats.append(repeat)

    def build(self, mode) -> Stream:
        return Stream(mode, self.params.universe, np.array(self.items, dtype=np.int64),
                      np.array(self.deltas, dtype=np.int64),
                      np.array(self.repeats, dtype=np.int64))


def gen_cash_hard(params: HardParams, inp: HardInstanceInput) -> HardStream:
    if params.family != "cash":
        raise ValueError("need cash-register parameters")
    if len(inp.x) != params.N:
        raise ValueError("x must have length N")
    if max(inp.v) > params.N or min(inp.v) < 1:
        raise ValueError("positions must lie in 1..N")
    srt = inp.sorted()
    params.copies(params.N)
    b = _Builder(params)
    checkpoints = []
    prev = 0
    for phase, (vj, yj) in enumerate(zip(srt.v, srt.y), 1):
        for i in range(prev + 1, vj + 1):
            b.add(i, inp.x[i - 1], 1, params.copies(i))
        b.add(vj, yj, 1, params.copies(vj))
        checkpoints.append((len(b.items) - 1, phase))
        prev = vj
    return HardStream(b.build(StreamMode.CASH_REGISTER), checkpoints)


def cash_checkpoint_vector(params: HardParams, inp: HardInstanceInput, j: int) -> FrequencyVector:
    """f(x_{<=v_j} + sum_{l: v_l <= v_j} y_l e_{v_l}) built directly from (x, v, y)."""
    vj = inp.v[j]
    counts: dict[int, int] = {}
    for i in range(1, vj + 1):
        it = params.item(i, inp.x[i - 1])
        counts[it] = counts.get(it, 0) + params.copies(i)
    for vl, yl in zip(inp.v, inp.y):
        if vl <= vj:
            it = params.item(vl, yl)
            counts[it] = counts.get(it, 0) + params.copies(vl)
    return FrequencyVector(params.universe, counts)


@dataclass(frozen=True)
class TurnstileInput:
    """One augmented-indexing instance: a in [k]^N, index t, query symbol q."""

    a: tuple[int, ...]
    t: int
    q: int

    @property
    def planted(self) -> bool:
        return self.a[self.t - 1] == self.q


def gen_turnstile_hard(params: HardParams, inputs: Sequence[TurnstileInput]) -> HardStream:
    if params.family != "turnstile":
        raise ValueError("need turnstile parameters")
    b = _Builder(params)
    checkpoints = []
    for phase, inst in enumerate(inputs, 1):
        if len(inst.a) != params.N or not 1 <= inst.t <= params.N:
            raise ValueError("instance does not match N")
        start = len(b.items)
        for i in range(1, inst.t + 1):
            b.add(i, inst.a[i - 1], 1, params.copies(i))
        b.add(inst.t, inst.q, -1, params.copies(inst.t))
        checkpoints.append((len(b.items) - 1, phase))
        for e in range(len(b.items) - 1, start - 1, -1):
            b.items.append(b.items[e])
            b.deltas.append(-b.deltas[e])
            b.repeats.append(b.repeats[e])
    return HardStream(b.build(StreamMode.TURNSTILE), checkpoints)


def turnstile_checkpoint_vector(params: HardParams, inst: TurnstileInput) -> FrequencyVector:
    """f(a - a_{>t} - q e_t) built directly from the instance."""
    counts: dict[int, int] = {}
    for i in range(1, inst.t + 1):
        it = params.item(i, inst.a[i - 1])
        counts[it] = counts.get(it, 0) + params.copies(i)
    it = params.item(inst.t, inst.q)
    counts[it] = counts.get(it, 0) - params.copies(inst.t)
    return FrequencyVector(params.universe, counts)


def gap_check(f_yes: FrequencyVector, f_no: FrequencyVector, p: float) -> float:
    """|F_p(yes) - F_p(no)| / min(F_p(yes), F_p(no))."""
    a = exact_moment(f_yes, p)
    b = exact_moment(f_no, p)
    if min(a, b) == 0:
        raise ValueError("gap undefined when a moment is zero")
    return abs(a - b) / min(a, b)


def gen_uniform(n: int, m: int, seed: int) -> Stream:
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = np.random.default_rng(seed)
    return Stream(StreamMode.CASH_REGISTER, n, rng.integers(0, n, size=m, dtype=np.int64))


def zipf_probabilities(n: int, skew: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** -skew
    return w / w.sum()


def gen_zipf(n: int, m: int, skew: float, seed: int) -> Stream:
    """Item r - 1 has probability proportional to r^-skew."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if skew <= 0:
        raise ValueError("skew must be positive")
    rng = np.random.default_rng(seed)
    items = rng.choice(n, size=m, p=zipf_probabilities(n, skew)).astype(np.int64)
    return Stream(StreamMode.CASH_REGISTER, n, items)


def write_checkpoints(path: str | Path, checkpoints: Sequence[tuple[int, int]]):
    with open(path, "w") as fh:
        for event_index, phase in checkpoints:
            fh.write(f"checkpoint {event_index} {phase}\n")


def read_checkpoints(path: str | Path) -> list[tuple[int, int]]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tag, e, ph = line.split()
        if tag != "checkpoint":
            raise ValueError(f"bad checkpoint line {line!r}")
        out.append((int(e), int(ph)))
    return out
