import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fptrack.hashing import (MERSENNE_61, eval_bucket, eval_sign, family_from_coefficients,
                             hash64, is_prime, mulmod_mersenne61, new_family, splitmix64,
                             splitmix64_array)


def test_family_is_reproducible():
    a = new_family(123, 4, 1 << 20, 2)
    b = new_family(123, 4, 1 << 20, 2)
    assert a.coefficients == b.coefficients


def test_degree_must_be_2_or_4():
    with pytest.raises(ValueError):
        new_family(1, 3, 10, 2)


def test_distinct_seeds_give_distinct_coefficients():
    tuples = {new_family(s, 4, 1 << 20, 2).coefficients for s in range(64)}
    assert len(tuples) == 64


def test_modulus_must_be_prime_and_cover_universe():
    with pytest.raises(ValueError):
        new_family(1, 2, 10, 2, field_modulus=9)
    with pytest.raises(ValueError):
        new_family(1, 2, 10, 2, field_modulus=7)


def test_sign_and_bucket_determinism_and_range():
    g = new_family(5, 4, 1000, 2)
    h = new_family(6, 2, 1000, 1)
    for i in range(0, 1000, 37):
        assert eval_sign(g, i) == eval_sign(g, i) in (1, -1)
        assert eval_bucket(h, i) == 0
    with pytest.raises(IndexError):
        eval_sign(g, 1000)
    with pytest.raises(IndexError):
        eval_bucket(h, -1)


@given(st.integers(0, MERSENNE_61 - 1), st.integers(0, MERSENNE_61 - 1))
def test_mulmod_matches_python_ints(a, b):
    got = mulmod_mersenne61(np.array([a], dtype=np.uint64), np.array([b], dtype=np.uint64))
    assert int(got[0]) == a * b % MERSENNE_61


@given(st.integers(0, 2**64 - 1), st.lists(st.integers(0, 2**32 - 1), min_size=1, max_size=20))
def test_vectorised_eval_matches_scalar(seed, xs):
    fam = new_family(seed, 4, 2**32, 7)
    vals = fam.values(xs)
    assert [int(v) for v in vals] == [fam.value(x) for x in xs]
    assert list(fam.buckets(xs)) == [eval_bucket(fam, x) for x in xs]
    g = new_family(seed, 4, 2**32, 2)
    assert list(g.signs(xs)) == [eval_sign(g, x) for x in xs]


def test_splitmix_scalar_and_array_agree():
    xs = [0, 1, 2**63, 2**64 - 1, 12345678901234]
    arr = splitmix64_array(np.array(xs, dtype=np.uint64))
    assert [int(v) for v in arr] == [splitmix64(x) for x in xs]


def test_hash64_seed_tree_distinct():
    seeds = {hash64(7, c, role) for c in range(200) for role in ("sign", "bucket", "copy")}
    assert len(seeds) == 600


def test_is_prime_small():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert is_prime(MERSENNE_61)
    assert not is_prime(MERSENNE_61 + 2)


def _exhaustive_values(P, degree, inputs):
    """Value tuples at ``inputs`` for every coefficient tuple of GF(P)^degree."""
    out = []
    for coeffs in itertools.product(range(P), repeat=degree):
        fam = family_from_coefficients(coeffs, universe=P, range=P, field_modulus=P)
        out.append(tuple(fam.value(x) for x in inputs))
    return out


def test_sign_marginal_is_half_away_from_top_residue():
    # modulus 7, all 7^4 tuples: among tuples whose value is not the top
    # residue 6, exactly half of the values are even (sign +1)
    P = 7
    for x in range(P):
        signs = Counter()
        for coeffs in itertools.product(range(P), repeat=4):
            g = family_from_coefficients(coeffs, universe=P, range=2, field_modulus=P)
            if g.value(x) != P - 1:
                signs[eval_sign(g, x)] += 1
        assert signs[1] == signs[-1] == 6 * P ** 3 // 2


def test_four_wise_independence_exhaustive_modulus_7():
    P = 7
    inputs = (0, 2, 3, 6)
    values = _exhaustive_values(P, 4, inputs)
    # the field values at 4 distinct points are exactly uniform on GF(7)^4
    assert len(set(values)) == P ** 4
    patterns = Counter(tuple(-1 if v & 1 else 1 for v in vals) for vals in values)
    plus = (P + 1) // 2
    for pattern, count in patterns.items():
        a = pattern.count(1)
        # signs are exactly independent: count = product of marginal counts
        assert count == plus ** a * (P - plus) ** (4 - a)
    assert len(patterns) == 16
    # marginal skew of folding GF(7) onto {+1,-1}: |4/7 - 1/2| / (1/2) = 1/7
    assert abs(plus / P - 0.5) / 0.5 <= 1 / 7 + 1e-12


@pytest.mark.parametrize("k", [2, 3])
def test_pairwise_independence_exhaustive_modulus_5(k):
    P = 5
    inputs = (1, 4)
    values = _exhaustive_values(P, 2, inputs)
    assert len(set(values)) == P ** 2
    marginal = Counter(v % k for v in range(P))
    pairs = Counter((a % k, b % k) for a, b in values)
    for (b1, b2), count in pairs.items():
        assert count == marginal[b1] * marginal[b2]
    # relative bucket skew from folding GF(P) onto k buckets is at most k / P;
    # at k = 2 this is the 1/5 quoted for modulus 5
    skew = max(abs(c / P - 1 / k) * k for c in marginal.values())
    assert skew <= k / P + 1e-12
    if k == 2:
        assert skew == pytest.approx(1 / 5)


def test_sign_bias_monte_carlo():
    rng = np.random.default_rng(0)
    total = 0
    n = 0
    for seed in rng.integers(0, 2**63, size=1000):
        g = new_family(int(seed), 4, 1 << 32, 2)
        xs = rng.integers(0, 1 << 32, size=1000)
        total += int(g.signs(xs).sum())
        n += xs.size
    assert n == 10**6
    assert abs(total / n) < 0.005
