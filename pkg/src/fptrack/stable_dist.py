"""Symmetric p-stable variates and the |X| quantile scale table.

Parameterisation is fixed to the characteristic function exp(-|t|^p): p = 1
is the standard Cauchy and p = 2 a Gaussian with variance 2.  Sampling is
counter based: draw ``i`` of a sampler depends only on ``(seed, i)``, so a
sketch can regenerate any matrix entry on demand and parallel generation needs
no shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .hashing import hash64, splitmix64_array

SCALE_SEED = 20240101
DEFAULT_SCALE_SAMPLES = 10_000_000
_TWO53 = float(1 << 53)


def lower_quantile(values, s: float = 0.5):
    """Order statistic at index floor(s * (len - 1)); always an actual sample."""
    v = np.asarray(values)
    if v.size == 0:
        raise ValueError("quantile of an empty sample")
    idx = int(math.floor(s * (v.size - 1)))
    return np.partition(v, idx)[idx]


def _uniform_from_bits(z: np.ndarray) -> np.ndarray:
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53


def cms_transform(p: float, u_angle: np.ndarray, u_exp: np.ndarray) -> np.ndarray:
    """Chambers-Mallows-Stuck map of two (0,1) uniforms to symmetric p-stable."""
    theta = math.pi * (np.asarray(u_angle) - 0.5)
    if p == 1.0:
        return np.tan(theta)
    w = -np.log(u_exp)
    return (np.sin(p * theta) / np.cos(theta) ** (1.0 / p)
            * (np.cos((1.0 - p) * theta) / w) ** ((1.0 - p) / p))


def stable_from_bases(p: float, bases: np.ndarray, draw_index) -> np.ndarray:
    """Variates for many samplers (given by their 64-bit bases) at ``draw_index``.

    Broadcasts ``bases`` against ``draw_index``; used to build sketch matrix
    columns without a Python loop over rows.
    """
    bases = np.asarray(bases, dtype=np.uint64)
    idx = np.asarray(draw_index, dtype=np.uint64)
    ctr = bases + np.uint64(2) * idx
    u1 = _uniform_from_bits(splitmix64_array(ctr))
    u2 = _uniform_from_bits(splitmix64_array(ctr + np.uint64(1)))
    return cms_transform(p, u1, u2)


@dataclass(frozen=True)
class StableSampler:
    p: float
    seed: int

    def __post_init__(self):
        if not 0 < self.p <= 2:
            raise ValueError(f"stability index must lie in (0, 2], got {self.p}")

    @property
    def base(self) -> int:
        return hash64(self.seed, "stable")

    def sample(self, draw_index: int) -> float:
        # routed through the array path so scalar and batch draws agree bitwise
        return float(self.samples(np.array([draw_index], dtype=np.uint64))[0])

    def samples(self, draw_indices) -> np.ndarray:
        return stable_from_bases(self.p, np.uint64(self.base), draw_indices)

    def batch(self, start: int, count: int) -> np.ndarray:
        return self.samples(np.arange(start, start + count, dtype=np.uint64))


def sample_stable(sampler: StableSampler, draw_index: int) -> float:
    return sampler.sample(draw_index)


@dataclass
class ScaleEntry:
    scale: float
    samples: int           # 0 marks an analytic entry

    @property
    def provenance(self) -> str:
        return "analytic" if self.samples == 0 else "monte-carlo"


def _key(p: float, s: float) -> tuple[float, float]:
    return (round(float(p), 12), round(float(s), 12))


@dataclass
class ScaleTable:
    entries: dict[tuple[float, float], ScaleEntry] = field(default_factory=dict)

    def get(self, p: float, s: float) -> ScaleEntry | None:
        return self.entries.get(_key(p, s))

    def put(self, p: float, s: float, entry: ScaleEntry):
        self.entries[_key(p, s)] = entry

    def dumps(self) -> str:
        lines = ["# p s scale samples   (samples = 0: analytic)"]
        for (p, s), e in sorted(self.entries.items()):
            lines.append(f"{p!r} {s!r} {e.scale!r} {e.samples}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path):
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ScaleTable":
        table = cls()
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            p, s, scale, samples = line.split()
            table.put(float(p), float(s), ScaleEntry(float(scale), int(samples)))
        return table

    @classmethod
    def load(cls, path: str | Path) -> "ScaleTable":
        return cls.loads(Path(path).read_text())


def _default_table() -> ScaleTable:
    try:
        text = resources.files("fptrack").joinpath("data/scale_table.txt").read_text()
    except FileNotFoundError:
        text = ""
    table = ScaleTable.loads(text)
    table.put(1.0, 0.5, ScaleEntry(1.0, 0))
    return table


DEFAULT_TABLE = _default_table()


def monte_carlo_scale(p: float, s: float, samples: int, seed: int = SCALE_SEED,
                      chunk: int = 1_000_000) -> float:
    sampler = StableSampler(p, seed)
    parts = [np.abs(sampler.batch(start, min(chunk, samples - start)))
             for start in range(0, samples, chunk)]
    return float(lower_quantile(np.concatenate(parts), s))


def median_scale(p: float, s: float = 0.5, samples: int = DEFAULT_SCALE_SAMPLES,
                 table: ScaleTable | None = None) -> float:
    """s-quantile of |X| for standard p-stable X (cached in ``table``).

    A cached entry is reused when it was built with at least ``samples``
    draws.  p = 1 is analytic for every s: tan(pi * s / 2).
    """
    if not 0 < p <= 2:
        raise ValueError("p must lie in (0, 2]")
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    table = DEFAULT_TABLE if table is None else table
    if p == 1.0:
        scale = 1.0 if s == 0.5 else math.tan(math.pi * s / 2)
        table.put(p, s, ScaleEntry(scale, 0))
        return scale
    hit = table.get(p, s)
    if hit is not None and (hit.samples == 0 or hit.samples >= samples):
        return hit.scale
    scale = monte_carlo_scale(p, s, samples)
    table.put(p, s, ScaleEntry(scale, samples))
    return scale
