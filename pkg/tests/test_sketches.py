import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fptrack.hashing import eval_bucket, eval_sign, hash64
from fptrack.sketches import (AmsSketch, MorrisCounter, StableSketch, ams_buckets, ams_estimate,
                              ams_merge, ams_ratio, ams_update, morris_estimate, morris_increment,
                              stable_estimate, stable_merge, stable_update)
from fptrack.stable_dist import StableSampler
from fptrack.hard_instances import gen_zipf
from fptrack.stream_model import exact_moment

streams = st.lists(st.tuples(st.integers(0, 31), st.integers(-5, 5)), max_size=40)


def test_bucket_count():
    assert ams_buckets(0.25) == 256


def test_single_update_touches_one_counter():
    sk = AmsSketch(16, 3, 100)
    ams_update(sk, 7, 3)
    nz = np.flatnonzero(sk.counters)
    assert len(nz) == 1 and abs(sk.counters[nz[0]]) == 3
    assert ams_estimate(sk) == 9


def test_update_cancels():
    sk = AmsSketch(16, 3, 100)
    sk.update(7, 1)
    sk.update(7, -1)
    assert not sk.counters.any()


def test_forced_collision_cancels():
    for seed in range(10_000):
        sk = AmsSketch(2, seed, 3)
        if sk.bucket(1) == sk.bucket(2) and sk.sign(1) == 1 and sk.sign(2) == -1:
            break
    else:
        pytest.fail("no seed with the required collision")
    sk.update(1, 1)
    sk.update(2, 1)
    assert sk.counters[sk.bucket(1)] == 0


def test_update_out_of_range():
    with pytest.raises(IndexError):
        AmsSketch(4, 0, 10).update(10, 1)


@pytest.mark.parametrize("seed", range(20))
def test_single_item_is_exact(seed):
    sk = AmsSketch(8, seed, 1000)
    sk.update(123, 17)
    assert sk.estimate() == 17 ** 2


def test_empty_estimate():
    assert AmsSketch(8, 0, 10).estimate() == 0


def test_unbiased_over_seeds():
    f = np.array([5, 3, 1, 1, 2, 8, 0, 4])
    items = np.arange(len(f))
    F2 = float((f ** 2).sum())
    est = []
    for seed in range(10_000):
        sk = AmsSketch(4, seed, len(f))
        sk.update_many(items, f)
        est.append(sk.estimate())
    est = np.array(est)
    stderr = est.std(ddof=1) / np.sqrt(len(est))
    assert abs(est.mean() - F2) <= 3 * stderr


@given(streams, streams)
def test_merge_is_bit_exact(s1, s2):
    a, b, ab = (AmsSketch(8, 11, 32) for _ in range(3))
    for i, d in s1:
        a.update(i, d)
        ab.update(i, d)
    for i, d in s2:
        b.update(i, d)
        ab.update(i, d)
    assert ams_merge(a, b) == ab
    assert ams_merge(a, AmsSketch(8, 11, 32)) == a


def test_merge_mismatch():
    with pytest.raises(ValueError):
        ams_merge(AmsSketch(8, 1, 10), AmsSketch(4, 1, 10))
    with pytest.raises(ValueError):
        ams_merge(AmsSketch(8, 1, 10), AmsSketch(8, 2, 10))


@given(streams, st.randoms(use_true_random=False))
def test_order_invariance(events, rnd):
    a = AmsSketch(8, 5, 32)
    b = AmsSketch(8, 5, 32)
    for i, d in events:
        a.update(i, d)
    shuffled = list(events)
    rnd.shuffle(shuffled)
    for i, d in shuffled:
        b.update(i, d)
    assert a == b


def test_batch_update_matches_scalar():
    s = gen_zipf(64, 2000, 1.1, 0)
    a, b = AmsSketch(32, 9, 64), AmsSketch(32, 9, 64)
    for e in s:
        a.update_event(e)
    b.update_many(s.items, s.deltas)
    assert a == b


def test_counter_mass_bounded_by_stream_length():
    s = gen_zipf(256, 5000, 1.1, 1)
    sk = AmsSketch(16, 2, 256)
    sk.update_many(s.items, s.deltas)
    assert np.abs(sk.counters).sum() <= len(s)


def test_dump_roundtrip():
    sk = AmsSketch(8, 4, 100)
    for i in range(50):
        sk.update(i, i % 3 - 1)
    assert AmsSketch.loads(sk.dumps()) == sk


def _dense_H(sk, dim):
    return np.array([[eval_sign(sk.sign_hash, i) * eval_sign(sk.sign_hash, j)
                      * (eval_bucket(sk.bucket_hash, i) == eval_bucket(sk.bucket_hash, j))
                      for j in range(dim)] for i in range(dim)], dtype=float)


def test_ratio_examples():
    for seed in range(10):
        sk = AmsSketch(4, seed, 8)
        e = np.zeros(8)
        e[3] = 1.0
        assert ams_ratio(e, sk) == pytest.approx(1.0)
        x = np.random.default_rng(seed).normal(size=8)
        assert ams_ratio(x, sk) == pytest.approx(ams_ratio(2 * x, sk), rel=1e-12)
    with pytest.raises(ValueError):
        ams_ratio(np.zeros(8), AmsSketch(4, 0, 8))


def test_ratio_equals_estimate_over_f2():
    rng = np.random.default_rng(5)
    for seed in range(25):
        sk = AmsSketch(4, seed, 8)
        x = rng.integers(-20, 21, size=8)
        if not x.any():
            continue
        sk.update_many(np.arange(8), x)
        H = _dense_H(sk, 8)
        oracle = float(x @ H @ x) / float(x @ x)
        assert ams_ratio(x, sk) == pytest.approx(oracle, rel=1e-9)
        assert ams_ratio(x, sk) == pytest.approx(sk.estimate() / float(x @ x), rel=1e-9)


def test_stable_update_linear():
    sk = StableSketch(40, 1.5, 3, 1000)
    sk.update(5, 2)
    before = sk.y.copy()
    sk.update(9, 1)
    sk.update(9, -1)
    np.testing.assert_allclose(sk.y, before, atol=1e-12, rtol=0)
    fresh = StableSketch(40, 1.5, 3, 1000)
    stable_update(fresh, 17, 6)
    np.testing.assert_array_equal(fresh.y, 6 * fresh.column(17))


def test_stable_matches_dense_oracle():
    rows, p, seed, n = 12, 1.5, 7, 20
    rng = np.random.default_rng(0)
    sk = StableSketch(rows, p, seed, n)
    f = np.zeros(n)
    for _ in range(200):
        i = int(rng.integers(n))
        d = int(rng.choice([-1, 1]))
        sk.update(i, d)
        f[i] += d
    # independent route: scalar draws per (row sampler, item)
    A = np.array([[StableSampler(p, hash64(seed, j)).sample(i) for i in range(n)]
                  for j in range(rows)])
    np.testing.assert_allclose(sk.y, A @ f, rtol=1e-9, atol=1e-9)


def test_stable_empty_estimate():
    assert stable_estimate(StableSketch(10, 1.5, 0, 10)) == 0


def test_stable_single_item_p1():
    c, good = 50, 0
    for trial in range(200):
        sk = StableSketch(400, 1.0, trial, 100)
        sk.update(3, c)
        good += abs(sk.estimate() - c) <= 0.25 * c
    assert good >= 2 / 3 * 200


def test_stable_p2_against_exact():
    good = 0
    for trial in range(200):
        s = gen_zipf(64, 300, 1.1, trial)
        sk = StableSketch(400, 2.0, 1000 + trial, 64)
        for e in s:
            sk.update_event(e)
        F2 = exact_moment(s.frequency_vector(), 2)
        good += abs(sk.estimate() - F2) <= 0.25 * F2
    assert good >= 2 / 3 * 200


@given(streams, streams)
def test_stable_merge_linearity(s1, s2):
    a, b, ab = (StableSketch(16, 1.5, 4, 32) for _ in range(3))
    for i, d in s1:
        a.update(i, d)
        ab.update(i, d)
    for i, d in s2:
        b.update(i, d)
        ab.update(i, d)
    merged = stable_merge(a, b)
    scale = max(1.0, np.abs(ab.y).max())
    assert np.abs(merged.y - ab.y).max() <= 1e-9 * scale


def test_stable_dump_roundtrip():
    sk = StableSketch(8, 1.5, 4, 100)
    sk.update(3, 5)
    back = StableSketch.loads(sk.dumps())
    np.testing.assert_array_equal(back.y, sk.y)
    assert back.estimate() == sk.estimate()


def test_morris_zero():
    assert morris_estimate(MorrisCounter(seed=0)) == 0


def test_morris_register_tail_base2():
    m = 10_000
    bound = int(np.ceil(np.log2(m + 1))) + 10
    for trial in range(100):
        c = MorrisCounter(2.0, seed=trial)
        morris_increment(c, m)
        assert c.register <= bound


def test_morris_skip_ahead_matches_unit_increments():
    m, trials = 200, 3000
    skip = []
    unit = []
    for t in range(trials):
        a = MorrisCounter(2.0, seed=t)
        a.increment(m)
        skip.append(a.register)
        b = MorrisCounter(2.0, seed=10**6 + t)
        for _ in range(m):
            b.increment()
        unit.append(b.register)
    assert abs(np.mean(skip) - np.mean(unit)) < 0.1
    assert abs(np.var(skip) - np.var(unit)) < 0.15


def test_morris_register_monotone():
    c = MorrisCounter(1.5, seed=1)
    last = 0
    for _ in range(200):
        c.increment(7)
        assert c.register >= last
        last = c.register


def test_stable_batch_update_matches_scalar():
    s = gen_zipf(64, 500, 1.1, 4)
    a, b = StableSketch(20, 1.5, 9, 64), StableSketch(20, 1.5, 9, 64)
    for e in s:
        a.update_event(e)
    b.update_many(s.items, s.deltas)
    np.testing.assert_allclose(a.y, b.y, rtol=1e-9, atol=1e-9)
    with pytest.raises(IndexError):
        b.update_many([64], [1])
