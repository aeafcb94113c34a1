# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of :mod:`emhlab.backends.py_core`.

Same two kernels (Gini tree growth, SMO dual solver), same semantics,
bit-identical floating-point results.  The reference module documents the
algorithms; this file only restates what matters for parity:

* every float expression is parenthesized exactly as numpy evaluates it in
  the reference, and the extension is compiled with ``-ffp-contract=off``
  so the compiler cannot fuse multiply-adds;
* the splitmix64 stream, node processing order, candidate order, and all
  tie-breaking comparisons match the reference operation for operation.

``tests/test_backends.py`` checks parity on randomized inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs
from libc.stdlib cimport free, malloc

cdef extern from "stdlib.h":
    void qsort(void* base, size_t nmemb, size_t size,
               int (*compar)(const void*, const void*) noexcept nogil) nogil

cnp.import_array()

ctypedef unsigned long long u64

cdef double EPS_ALPHA = 1e-10


cdef struct Pair:
    double v
    long long lab


cdef int _pair_cmp(const void* pa, const void* pb) noexcept nogil:
    cdef double va = (<const Pair*> pa).v
    cdef double vb = (<const Pair*> pb).v
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


cdef inline u64 _sm64(u64* state) noexcept nogil:
    state[0] = state[0] + <u64> 0x9E3779B97F4A7C15
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * <u64> 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64> 0x94D049BB133111EB
    return z ^ (z >> 31)


def grow_tree(double[:, ::1] XT, signed char[:] y, sample_idx,
              long max_features, seed, long min_leaf=1):
    """See :func:`emhlab.backends.py_core.grow_tree`."""
    cdef long d = XT.shape[0]
    cdef cnp.ndarray idx_arr = np.asarray(sample_idx, dtype=np.int64).copy()
    cdef long long[:] idx = idx_arr
    cdef long m = idx.shape[0]
    cdef long mtry = max_features if max_features < d else d
    cdef long cap = 2 * m + 1

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    value_arr = np.zeros(cap, dtype=np.int8)
    cdef int[:] feature = feature_arr
    cdef double[:] threshold = threshold_arr
    cdef int[:] left = left_arr
    cdef int[:] right = right_arr
    cdef signed char[:] value = value_arr

    cdef u64 state = <u64> (int(seed) & ((1 << 64) - 1))

    cdef Pair* pairs = <Pair*> malloc(m * sizeof(Pair))
    cdef long long* tmp = <long long*> malloc(m * sizeof(long long))
    cdef long* feats = <long*> malloc(d * sizeof(long))
    cdef long* st_start = <long*> malloc((2 * m + 4) * sizeof(long))
    cdef long* st_end = <long*> malloc((2 * m + 4) * sizeof(long))
    cdef int* st_node = <int*> malloc((2 * m + 4) * sizeof(int))
    if (pairs == NULL or tmp == NULL or feats == NULL or st_start == NULL
            or st_end == NULL or st_node == NULL):
        free(pairs); free(tmp); free(feats)
        free(st_start); free(st_end); free(st_node)
        raise MemoryError()

    cdef long n_nodes = 1
    cdef long top = 1
    cdef long start, end, mn, npos, i, j, t, c, f, nl, nr, nleft, k2, sw
    cdef long long lp, lneg, rp, rneg, cpos
    cdef int node, lc, rc
    cdef long best_f
    cdef double best_score, best_thr, sl, sr, sc
    cdef u64 z

    st_start[0] = 0
    st_end[0] = m
    st_node[0] = 0
    try:
        while top > 0:
            top -= 1
            start = st_start[top]
            end = st_end[top]
            node = st_node[top]
            mn = end - start
            npos = 0
            for t in range(start, end):
                npos += y[idx[t]]
            if npos == 0 or npos == mn or mn < 2 * min_leaf:
                value[node] = 1 if 2 * npos >= mn else 0
                continue

            for i in range(d):
                feats[i] = i
            for i in range(mtry):
                z = _sm64(&state)
                j = i + <long> (z % <u64> (d - i))
                sw = feats[i]
                feats[i] = feats[j]
                feats[j] = sw

            best_score = -INFINITY
            best_f = -1
            best_thr = 0.0
            for c in range(mtry):
                f = feats[c]
                for t in range(mn):
                    pairs[t].v = XT[f, idx[start + t]]
                    pairs[t].lab = y[idx[start + t]]
                qsort(pairs, mn, sizeof(Pair), _pair_cmp)
                cpos = 0
                for t in range(mn - 1):
                    cpos += pairs[t].lab
                    if pairs[t].v != pairs[t + 1].v:
                        nl = t + 1
                        nr = mn - nl
                        if nl < min_leaf or nr < min_leaf:
                            continue
                        lp = cpos
                        lneg = nl - lp
                        rp = npos - lp
                        rneg = nr - rp
                        sl = (<double> (lp * lp + lneg * lneg)) / (<double> nl)
                        sr = (<double> (rp * rp + rneg * rneg)) / (<double> nr)
                        sc = sl + sr
                        if sc > best_score:
                            best_score = sc
                            best_f = f
                            best_thr = (pairs[t].v + pairs[t + 1].v) * 0.5

            if best_f < 0:
                value[node] = 1 if 2 * npos >= mn else 0
                continue

            nleft = 0
            for t in range(start, end):
                if XT[best_f, idx[t]] <= best_thr:
                    tmp[nleft] = idx[t]
                    nleft += 1
            k2 = nleft
            for t in range(start, end):
                if not (XT[best_f, idx[t]] <= best_thr):
                    tmp[k2] = idx[t]
                    k2 += 1
            for t in range(mn):
                idx[start + t] = tmp[t]

            feature[node] = <int> best_f
            threshold[node] = best_thr
            lc = <int> n_nodes
            rc = <int> (n_nodes + 1)
            n_nodes += 2
            left[node] = lc
            right[node] = rc
            st_start[top] = start + nleft
            st_end[top] = end
            st_node[top] = rc
            top += 1
            st_start[top] = start
            st_end[top] = start + nleft
            st_node[top] = lc
            top += 1
    finally:
        free(pairs)
        free(tmp)
        free(feats)
        free(st_start)
        free(st_end)
        free(st_node)

    return (
        feature_arr[:n_nodes].copy(),
        threshold_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        value_arr[:n_nodes].copy(),
    )


cdef int _take_step(double[:, ::1] K, double[:] y, double[:] alpha, double[:] E,
                    double C, long n, long i1, long i2,
                    double* b, long long* steps, long long max_steps,
                    bint* stop) noexcept:
    cdef double a1, a2, y1, y2, e1, e2, s, lo, hi
    cdef double k11, k12, k22, eta, a2new, a1new, d1, d2, b1, b2, bnew, db
    cdef long j
    if i1 == i2:
        return 0
    a1 = alpha[i1]
    a2 = alpha[i2]
    y1 = y[i1]
    y2 = y[i2]
    e1 = E[i1]
    e2 = E[i2]
    s = y1 * y2
    if y1 != y2:
        lo = a2 - a1
        if lo < 0.0:
            lo = 0.0
        hi = C + a2 - a1
        if hi > C:
            hi = C
    else:
        lo = a1 + a2 - C
        if lo < 0.0:
            lo = 0.0
        hi = a1 + a2
        if hi > C:
            hi = C
    if lo == hi:
        return 0
    k11 = K[i1, i1]
    k12 = K[i1, i2]
    k22 = K[i2, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta <= 0.0:
        return 0
    a2new = a2 + y2 * (e1 - e2) / eta
    if a2new < lo:
        a2new = lo
    elif a2new > hi:
        a2new = hi
    if fabs(a2new - a2) < EPS_ALPHA * (a2new + a2 + EPS_ALPHA):
        return 0
    a1new = a1 + s * (a2 - a2new)
    d1 = y1 * (a1new - a1)
    d2 = y2 * (a2new - a2)
    b1 = b[0] - e1 - d1 * k11 - d2 * k12
    b2 = b[0] - e2 - d1 * k12 - d2 * k22
    if 0.0 < a1new and a1new < C:
        bnew = b1
    elif 0.0 < a2new and a2new < C:
        bnew = b2
    else:
        bnew = (b1 + b2) * 0.5
    db = bnew - b[0]
    for j in range(n):
        E[j] = E[j] + ((d1 * K[i1, j] + d2 * K[i2, j]) + db)
    alpha[i1] = a1new
    alpha[i2] = a2new
    b[0] = bnew
    steps[0] += 1
    if steps[0] >= max_steps:
        stop[0] = True
    return 1


cdef int _examine(double[:, ::1] K, double[:] y, double[:] alpha, double[:] E,
                  double C, double tol, long n, long i2,
                  double* b, long long* steps, long long max_steps,
                  bint* stop) noexcept:
    cdef double y2 = y[i2]
    cdef double a2 = alpha[i2]
    cdef double e2 = E[i2]
    cdef double r2 = e2 * y2
    cdef double bestv, av
    cdef long besti, i1, j
    if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
        return 0
    bestv = -1.0
    besti = -1
    for j in range(n):
        if alpha[j] > 0.0 and alpha[j] < C:
            av = fabs(E[j] - e2)
            if av > bestv:
                bestv = av
                besti = j
    if besti >= 0:
        if _take_step(K, y, alpha, E, C, n, besti, i2, b, steps, max_steps, stop):
            return 1
    for i1 in range(n):
        if alpha[i1] > 0.0 and alpha[i1] < C:
            if _take_step(K, y, alpha, E, C, n, i1, i2, b, steps, max_steps, stop):
                return 1
    for i1 in range(n):
        if _take_step(K, y, alpha, E, C, n, i1, i2, b, steps, max_steps, stop):
            return 1
    return 0


def smo_solve(double[:, ::1] K, double[:] y, double C, double tol,
              double[:] alpha, double[:] E, double b0, long long max_steps):
    """See :func:`emhlab.backends.py_core.smo_solve`."""
    cdef long n = alpha.shape[0]
    cdef double b = b0
    cdef long long steps = 0
    cdef bint stop = False
    cdef bint examine_all = True
    cdef bint converged = False
    cdef long num_changed, i2
    while True:
        num_changed = 0
        for i2 in range(n):
            if stop:
                break
            if examine_all or (alpha[i2] > 0.0 and alpha[i2] < C):
                num_changed += _examine(K, y, alpha, E, C, tol, n, i2,
                                        &b, &steps, max_steps, &stop)
        if stop:
            break
        if examine_all:
            if num_changed == 0:
                converged = True
                break
            examine_all = False
        elif num_changed == 0:
            examine_all = True
    return b, int(steps), bool(converged)
