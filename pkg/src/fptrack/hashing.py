"""Seeded k-wise independent polynomial hash families.

A family of degree ``d`` is a random polynomial with ``d`` coefficients over
GF(P), which is d-wise independent on inputs below ``P``.  Outputs are folded
to a range ``r``: the sign hash uses the low bit of the field value (even ->
+1) and the bucket hash uses ``value % r``.  Folding an odd field onto ``r``
values leaves a bias of at most ``r / P`` relative per output; with the
default P = 2^61 - 1 that is below 1e-18 for any range used here.  On toy
fields (tests use P = 5, 7) the bias is visible and is exactly the fold
count, e.g. ``Pr[sign = +1] = (P + 1) / (2P)``; the only value breaking the
even/odd balance is the top residue ``P - 1``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

MERSENNE_61 = (1 << 61) - 1
MASK64 = (1 << 64) - 1

_ROLE_CODES = {"sign": 1, "bucket": 2, "stable": 3, "trial": 4, "copy": 5, "stream": 6}


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorised :func:`splitmix64` over a uint64 array (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _word(w) -> int:
    if isinstance(w, str):
        if w in _ROLE_CODES:
            return _ROLE_CODES[w]
        return int.from_bytes(hashlib.blake2b(w.encode(), digest_size=8).digest(), "little")
    return int(w) & MASK64


def hash64(*words) -> int:
    """Mix integers / role names into one 64-bit seed.

    ``hash64(master_seed, copy_index, "sign")`` is the seed tree used for
    every tracker copy, so copies are independent and individually
    re-creatable.
    """
    h = 0x243F6A8885A308D3
    for w in words:
        h = splitmix64(h ^ _word(w))
    return h


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    if n == MERSENNE_61:
        return True
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic Miller-Rabin bases for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def mulmod_mersenne61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise ``a * b mod (2^61 - 1)`` for uint64 inputs already < 2^61."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    lo32 = np.uint64(0xFFFFFFFF)
    p = np.uint64(MERSENNE_61)
    a_hi, a_lo = a >> np.uint64(32), a & lo32
    b_hi, b_lo = b >> np.uint64(32), b & lo32
    hh = a_hi * b_hi                  # < 2^58, weight 2^64 == 8 (mod p)
    mid = a_hi * b_lo + a_lo * b_hi   # < 2^62, weight 2^32
    ll = a_lo * b_lo                  # < 2^64
    mid_hi, mid_lo = mid >> np.uint64(29), mid & np.uint64((1 << 29) - 1)
    s = (hh << np.uint64(3)) + mid_hi + (mid_lo << np.uint64(32)) \
        + (ll & p) + (ll >> np.uint64(61))
    s = (s & p) + (s >> np.uint64(61))
    s = (s & p) + (s >> np.uint64(61))
    return np.where(s >= p, s - p, s)


@dataclass(frozen=True)
class HashFamily:
    degree: int
    coefficients: tuple[int, ...]   # constant term first
    field_modulus: int
    range: int
    universe: int

    def value(self, i: int) -> int:
        """Raw polynomial value in GF(P)."""
        if not 0 <= i < self.universe:
            raise IndexError(f"hash input {i} outside universe [0, {self.universe})")
        P = self.field_modulus
        acc = 0
        for a in reversed(self.coefficients):
            acc = (acc * i + a) % P
        return acc

    def values(self, items) -> np.ndarray:
        """Vectorised :meth:`value` returning uint64."""
        x = np.asarray(items, dtype=np.int64)
        if x.size and (x.min() < 0 or x.max() >= self.universe):
            raise IndexError("hash input outside universe")
        P = self.field_modulus
        if P < (1 << 31):
            xs = x % P
            acc = np.zeros(x.shape, dtype=np.int64)
            for a in reversed(self.coefficients):
                acc = (acc * xs + a) % P
            return acc.astype(np.uint64)
        if P != MERSENNE_61:
            return np.array([self.value(int(i)) for i in x.ravel()],
                            dtype=np.uint64).reshape(x.shape)
        xs = x.astype(np.uint64)
        acc = np.zeros(x.shape, dtype=np.uint64)
        for a in reversed(self.coefficients):
            acc = mulmod_mersenne61(acc, xs) + np.uint64(a)
            acc = np.where(acc >= np.uint64(P), acc - np.uint64(P), acc)
        return acc

    def signs(self, items) -> np.ndarray:
        return np.where(self.values(items) & np.uint64(1), -1, 1).astype(np.int64)

    def buckets(self, items) -> np.ndarray:
        return (self.values(items) % np.uint64(self.range)).astype(np.int64)


def new_family(seed: int, degree: int, universe: int, range: int,
               field_modulus: int = MERSENNE_61) -> HashFamily:
    if degree not in (2, 4):
        raise ValueError(f"degree must be 2 or 4, got {degree}")
    if universe < 1 or range < 1:
        raise ValueError("universe and range must be >= 1")
    if not is_prime(field_modulus):
        raise ValueError(f"field modulus {field_modulus} is not prime")
    if field_modulus < universe:
        raise ValueError("field modulus must exceed every universe index")
    rng = np.random.default_rng(seed & MASK64)
    coeffs = tuple(int(c) for c in rng.integers(0, field_modulus, size=degree, dtype=np.uint64))
    return HashFamily(degree, coeffs, field_modulus, range, universe)


def family_from_coefficients(coefficients, universe: int, range: int,
                             field_modulus: int) -> HashFamily:
    coefficients = tuple(int(c) % field_modulus for c in coefficients)
    if len(coefficients) not in (2, 4):
        raise ValueError("degree must be 2 or 4")
    return HashFamily(len(coefficients), coefficients, field_modulus, range, universe)


def eval_sign(fam: HashFamily, i: int) -> int:
    if fam.range != 2:
        raise ValueError("sign hash needs range 2")
    return -1 if fam.value(i) & 1 else 1


def eval_bucket(fam: HashFamily, i: int) -> int:
    return fam.value(i) % fam.range
