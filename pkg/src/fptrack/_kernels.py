"""Compiled per-update tracking loops.

Both kernels replay a stream through ``l`` sketch copies and the exact
oracle, take the tracker estimate after every event and record the worst
relative error.  They mirror :class:`fptrack.tracker.Tracker` exactly; the
test suite checks them against the pure-Python path.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def select_kth(buf, n, kth):
    """In-place quickselect: returns the kth smallest of buf[:n]."""
    lo = 0
    hi = n - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        # median-of-three pivot keeps sorted / constant inputs linear
        a = buf[lo]
        b = buf[mid]
        c = buf[hi]
        if a < b:
            if b < c:
                pivot = b
            elif a < c:
                pivot = c
            else:
                pivot = a
        else:
            if a < c:
                pivot = a
            elif b < c:
                pivot = c
            else:
                pivot = b
        i = lo
        j = hi
        while i <= j:
            while buf[i] < pivot:
                i += 1
            while buf[j] > pivot:
                j -= 1
            if i <= j:
                tmp = buf[i]
                buf[i] = buf[j]
                buf[j] = tmp
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            return buf[kth]
    return buf[kth]


@njit(cache=True)
def ams_track(ids, weights, signs, buckets, k, eps, keep, est_out, exact_out, l1_out):
    """Median-of-AMS tracking over one stream.

    ids: compact item ids; weights: delta * repeat per event;
    signs / buckets: (copies, distinct items) hash tables.
    Returns (max_rel, argmax, first_violation, skipped); -1 marks "none".
    """
    l = signs.shape[0]
    d = signs.shape[1]
    counters = np.zeros((l, k), dtype=np.int64)
    est = np.zeros(l, dtype=np.int64)
    buf = np.empty(l, dtype=np.int64)
    freq = np.zeros(d, dtype=np.int64)
    exact = np.int64(0)
    l1 = np.int64(0)
    kth = (l - 1) // 2
    max_rel = 0.0
    argmax = -1
    first_bad = -1
    skipped = 0
    for t in range(ids.shape[0]):
        i = ids[t]
        w = weights[t]
        f_old = freq[i]
        f_new = f_old + w
        freq[i] = f_new
        exact += w * (2 * f_old + w)
        l1 += abs(f_new) - abs(f_old)
        for c in range(l):
            b = buckets[c, i]
            v = w * signs[c, i]
            old = counters[c, b]
            counters[c, b] = old + v
            est[c] += v * (2 * old + v)
            buf[c] = est[c]
        med = select_kth(buf, l, kth)
        if keep:
            est_out[t] = med
            exact_out[t] = exact
            l1_out[t] = l1
        if exact == 0:
            skipped += 1
            continue
        rel = abs(float(med) - float(exact)) / float(exact)
        if argmax < 0 or rel > max_rel:
            max_rel = rel
            argmax = t
        if rel > eps and first_bad < 0:
            first_bad = t
    return max_rel, argmax, first_bad, skipped


@njit(cache=True)
def stable_track(ids, weights, cols, copies, rows, p, s_index, scale, eps,
                 keep, est_out, exact_out, l1_out):
    """Median-of-StableSketch tracking.

    cols: (distinct items, copies * rows) matrix columns, copy-major within a
    row of ``cols``.  Each copy's estimate is (|y|_(s) / scale) ** p and the
    tracker reports the lower median over copies.
    """
    d = cols.shape[0]
    y = np.zeros(copies * rows, dtype=np.float64)
    rowbuf = np.empty(rows, dtype=np.float64)
    copybuf = np.empty(copies, dtype=np.float64)
    freq = np.zeros(d, dtype=np.int64)
    exact = 0.0
    l1 = np.int64(0)
    kth = (copies - 1) // 2
    max_rel = 0.0
    argmax = -1
    first_bad = -1
    skipped = 0
    for t in range(ids.shape[0]):
        i = ids[t]
        w = weights[t]
        f_old = freq[i]
        f_new = f_old + w
        freq[i] = f_new
        exact += abs(float(f_new)) ** p - abs(float(f_old)) ** p
        l1 += abs(f_new) - abs(f_old)
        for j in range(copies * rows):
            y[j] += w * cols[i, j]
        for c in range(copies):
            for j in range(rows):
                rowbuf[j] = abs(y[c * rows + j])
            q = select_kth(rowbuf, rows, s_index)
            copybuf[c] = (q / scale) ** p
        med = select_kth(copybuf, copies, kth)
        # integer-exact F_p is zero iff the vector is empty
        if l1 == 0:
            exact = 0.0
        if keep:
            est_out[t] = med
            exact_out[t] = exact
            l1_out[t] = l1
        if l1 == 0:
            skipped += 1
            continue
        rel = abs(med - exact) / exact
        if argmax < 0 or rel > max_rel:
            max_rel = rel
            argmax = t
        if rel > eps and first_bad < 0:
            first_bad = t
    return max_rel, argmax, first_bad, skipped
