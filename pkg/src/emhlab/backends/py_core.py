"""Pure-numpy reference implementation of the hot kernels.

Two kernels live here: greedy growth of a binary classification tree
(the inner loop of the random forest) and a sequential-minimal-optimization
solver for the soft-margin SVM dual.  ``emhlab._core`` is a compiled twin of
this module; the two are kept bit-identical so that results do not depend on
which backend is active.  Every floating-point expression below is written in
the exact evaluation order the compiled version uses, so edits here must be
mirrored there (and vice versa).  ``tests/test_backends.py`` enforces parity.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

EPS_ALPHA = 1e-10


def _sm64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def grow_tree(XT, y, sample_idx, max_features, seed, min_leaf=1):
    """Grow a binary Gini tree on the rows named by ``sample_idx``.

    Parameters
    ----------
    XT : float64 array, shape (d, n)
        Feature-major training matrix (one row per feature).
    y : int8 array, shape (n,)
        Class labels in {0, 1}.
    sample_idx : integer array, shape (m,)
        Row indices to train on, typically a bootstrap draw.  Duplicates
        are allowed and counted with multiplicity.
    max_features : int
        Number of candidate features drawn (without replacement) at each
        node, in a deterministic order given by ``seed``.
    seed : int
        splitmix64 state used for the per-node feature draws.
    min_leaf : int
        Minimum number of samples on each side of an accepted split.

    Returns
    -------
    (feature, threshold, left, right, value)
        Parallel arrays describing the tree.  ``feature[i] == -1`` marks a
        leaf whose predicted class is ``value[i]``; otherwise node ``i``
        sends samples with ``x[feature[i]] <= threshold[i]`` to node
        ``left[i]`` and the rest to ``right[i]``.  Node 0 is the root.

    Splits are scored by the count form of the Gini criterion,
    ``(lp^2 + ln^2) / nl + (rp^2 + rn^2) / nr``, which is monotone in the
    usual weighted-impurity decrease but needs no division by the node
    size.  A node splits whenever it is impure and some feature still
    separates it; zero-gain splits are kept, which lets parity problems
    such as XOR be carved up instead of collapsing to a majority leaf.
    Ties are broken toward the earliest candidate feature drawn and the
    lowest threshold, and leaves predict the majority class with ties
    going to class 1.
    """
    d, n = XT.shape
    idx = np.asarray(sample_idx, dtype=np.int64).copy()
    m = idx.shape[0]
    mtry = min(int(max_features), d)
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.int8)

    state = int(seed) & _MASK64
    n_nodes = 1
    stack = [(0, m, 0)]
    while stack:
        start, end, node = stack.pop()
        seg = idx[start:end]
        mn = end - start
        lab = y[seg].astype(np.int64)
        npos = int(lab.sum())
        if npos == 0 or npos == mn or mn < 2 * min_leaf:
            value[node] = 1 if 2 * npos >= mn else 0
            continue

        feats = list(range(d))
        for i in range(mtry):
            state, z = _sm64(state)
            j = i + (z % (d - i))
            feats[i], feats[j] = feats[j], feats[i]

        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in feats[:mtry]:
            v = XT[f, seg]
            order = np.argsort(v, kind="stable")
            vs = v[order]
            bound = np.nonzero(vs[:-1] != vs[1:])[0]
            if bound.size == 0:
                continue
            cum = np.cumsum(lab[order])
            nl = bound + 1
            nr = mn - nl
            lp = cum[bound]
            lneg = nl - lp
            rp = npos - lp
            rneg = nr - rp
            score = (lp * lp + lneg * lneg) / nl + (rp * rp + rneg * rneg) / nr
            if min_leaf > 1:
                score = np.where((nl >= min_leaf) & (nr >= min_leaf), score, -np.inf)
            jb = int(np.argmax(score))
            s = float(score[jb])
            if s > best_score:
                best_score = s
                best_f = f
                best_thr = (vs[bound[jb]] + vs[bound[jb] + 1]) * 0.5

        if best_f < 0:
            value[node] = 1 if 2 * npos >= mn else 0
            continue

        go_left = XT[best_f, seg] <= best_thr
        nleft = int(go_left.sum())
        idx[start:end] = np.concatenate([seg[go_left], seg[~go_left]])
        feature[node] = best_f
        threshold[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        stack.append((start + nleft, end, rc))
        stack.append((start, start + nleft, lc))

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


def smo_solve(K, y, C, tol, alpha, E, b0, max_steps):
    """Solve the soft-margin SVM dual by sequential minimal optimization.

    Parameters
    ----------
    K : float64 array, shape (n, n)
        Kernel Gram matrix of the training points.
    y : float64 array, shape (n,)
        Targets in {-1.0, +1.0}.
    C : float
        Box constraint on the dual variables.
    tol : float
        Karush-Kuhn-Tucker violation tolerance used to pick candidates.
    alpha : float64 array, shape (n,)
        Dual variables, updated in place.  May carry a warm start as long
        as it is feasible (0 <= alpha <= C and sum(alpha * y) == 0).
    E : float64 array, shape (n,)
        Error cache ``f(x_i) - y_i`` for the incoming ``alpha``/``b0``,
        updated in place.  The caller initializes it (for a cold start,
        ``-y`` when ``b0`` is 0).
    b0 : float
        Incoming intercept of the decision function ``f``.
    max_steps : int
        Cap on successful pair updates before giving up.

    Returns
    -------
    (b, steps, converged)
        Final intercept, number of pair updates taken, and whether a full
        sweep completed with no KKT violations at tolerance ``tol``.

    The pair selection follows the classic two-loop heuristic: sweep all
    points, then only the non-bound ones, choosing the partner whose
    cached error differs most.  The fallback scans are deterministic
    (always from index 0) so that repeated runs take identical paths.
    Pairs whose kernel curvature ``eta`` is not positive are skipped;
    with a positive semi-definite kernel that only discards points which
    coincide in feature space.
    """
    n = alpha.shape[0]
    C = float(C)
    tol = float(tol)
    b = float(b0)
    steps = 0
    stop = False

    def take_step(i1, i2):
        nonlocal E, b, steps, stop
        if i1 == i2:
            return 0
        a1 = float(alpha[i1])
        a2 = float(alpha[i2])
        y1 = float(y[i1])
        y2 = float(y[i2])
        e1 = float(E[i1])
        e2 = float(E[i2])
        s = y1 * y2
        if y1 != y2:
            lo = max(0.0, a2 - a1)
            hi = min(C, C + a2 - a1)
        else:
            lo = max(0.0, a1 + a2 - C)
            hi = min(C, a1 + a2)
        if lo == hi:
            return 0
        k11 = float(K[i1, i1])
        k12 = float(K[i1, i2])
        k22 = float(K[i2, i2])
        eta = k11 + k22 - 2.0 * k12
        if eta <= 0.0:
            return 0
        a2new = a2 + y2 * (e1 - e2) / eta
        if a2new < lo:
            a2new = lo
        elif a2new > hi:
            a2new = hi
        if abs(a2new - a2) < EPS_ALPHA * (a2new + a2 + EPS_ALPHA):
            return 0
        a1new = a1 + s * (a2 - a2new)
        d1 = y1 * (a1new - a1)
        d2 = y2 * (a2new - a2)
        b1 = b - e1 - d1 * k11 - d2 * k12
        b2 = b - e2 - d1 * k12 - d2 * k22
        if 0.0 < a1new < C:
            bnew = b1
        elif 0.0 < a2new < C:
            bnew = b2
        else:
            bnew = (b1 + b2) * 0.5
        db = bnew - b
        E += d1 * K[i1] + d2 * K[i2] + db
        alpha[i1] = a1new
        alpha[i2] = a2new
        b = bnew
        steps += 1
        if steps >= max_steps:
            stop = True
        return 1

    def examine(i2):
        y2 = float(y[i2])
        a2 = float(alpha[i2])
        e2 = float(E[i2])
        r2 = e2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
            return 0
        vals = np.where((alpha > 0.0) & (alpha < C), np.abs(E - e2), -1.0)
        i1 = int(np.argmax(vals))
        if vals[i1] >= 0.0:
            if take_step(i1, i2):
                return 1
        for i1 in range(n):
            if alpha[i1] > 0.0 and alpha[i1] < C:
                if take_step(i1, i2):
                    return 1
        for i1 in range(n):
            if take_step(i1, i2):
                return 1
        return 0

    examine_all = True
    converged = False
    while True:
        num_changed = 0
        for i2 in range(n):
            if stop:
                break
            if examine_all or (alpha[i2] > 0.0 and alpha[i2] < C):
                num_changed += examine(i2)
        if stop:
            break
        if examine_all:
            if num_changed == 0:
                converged = True
                break
            examine_all = False
        elif num_changed == 0:
            examine_all = True

    return b, steps, converged
