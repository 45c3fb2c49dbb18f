"""Numba kernels for binary Gini trees.

Trees are grown depth-first from an explicit stack. Randomness comes from a
xorshift64* stream seeded per tree, so a tree depends only on its data and
its seed.
"""
import numpy as np
from numba import njit

_MULT = np.uint64(2685821657736338717)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _next_u64(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * _MULT


@njit(cache=True)
def _uniform(state):
    return float(_next_u64(state) >> np.uint64(11)) * _INV53


@njit(cache=True)
def _randbelow(state, n):
    r = int(_uniform(state) * n)
    return r if r < n else n - 1


@njit(cache=True)
def _gini(w0, w1):
    n = w0 + w1
    if n <= 0.0:
        return 0.0
    p0 = w0 / n
    p1 = w1 / n
    return 1.0 - p0 * p0 - p1 * p1


@njit(cache=True)
def _better(imp, f, thr, best_imp, best_f, best_thr):
    # lexicographic (impurity, feature index, threshold)
    if imp < best_imp:
        return True
    if imp == best_imp:
        if f < best_f:
            return True
        if f == best_f and thr < best_thr:
            return True
    return False


@njit(cache=True, nogil=True)
def build_tree(XT, y, w, rows, mtry, min_leaf, max_depth, extra, seed):
    """Grow one tree.

    XT is ``[n_features x n_samples]``; ``w`` are per-sample weights (bootstrap
    counts); ``rows`` lists the samples with positive weight. ``max_depth < 0``
    means unlimited. Returns node arrays plus the per-feature weighted impurity
    decrease.
    """
    n_features = XT.shape[0]
    n_rows = rows.shape[0]
    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, 2))
    importance = np.zeros(n_features)

    state = np.empty(1, dtype=np.uint64)
    state[0] = seed  # must be non-zero

    idx = rows.copy()
    perm = np.arange(n_features)
    vals = np.empty(n_rows)
    order_buf = np.empty(n_rows, dtype=np.int64)

    # stack entries: start, end, depth, parent, is_left
    stack = np.empty((cap, 5), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n_rows
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1
    n_nodes = 0

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        is_left = stack[top, 4]

        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node

        w0 = 0.0
        w1 = 0.0
        for i in range(start, end):
            r = idx[i]
            if y[r] == 1:
                w1 += w[r]
            else:
                w0 += w[r]
        counts[node, 0] = w0
        counts[node, 1] = w1
        n_w = w0 + w1
        imp = _gini(w0, w1)

        if imp <= 0.0 or n_w < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        best_imp = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        for i in range(n_features):
            if visited >= mtry:
                break
            j = i + _randbelow(state, n_features - i)
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
            f = perm[i]
            xf = XT[f]
            lo = np.inf
            hi = -np.inf
            for k in range(start, end):
                v = xf[idx[k]]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if not hi > lo:
                continue
            visited += 1

            if extra:
                thr = lo + _uniform(state) * (hi - lo)
                if thr >= hi:
                    thr = lo
                l0 = 0.0
                l1 = 0.0
                for k in range(start, end):
                    r = idx[k]
                    if xf[r] <= thr:
                        if y[r] == 1:
                            l1 += w[r]
                        else:
                            l0 += w[r]
                nl = l0 + l1
                nr = n_w - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                child = (nl * _gini(l0, l1) + nr * _gini(w0 - l0, w1 - l1)) / n_w
                if _better(child, f, thr, best_imp, best_f, best_thr):
                    best_imp = child
                    best_f = f
                    best_thr = thr
            else:
                m = end - start
                for k in range(m):
                    vals[k] = xf[idx[start + k]]
                order = np.argsort(vals[:m], kind="mergesort")
                for k in range(m):
                    order_buf[k] = idx[start + order[k]]
                l0 = 0.0
                l1 = 0.0
                for k in range(m - 1):
                    r = order_buf[k]
                    if y[r] == 1:
                        l1 += w[r]
                    else:
                        l0 += w[r]
                    v_here = xf[r]
                    v_next = xf[order_buf[k + 1]]
                    if not v_next > v_here:
                        continue
                    nl = l0 + l1
                    nr = n_w - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    child = (nl * _gini(l0, l1) + nr * _gini(w0 - l0, w1 - l1)) / n_w
                    thr = 0.5 * (v_here + v_next)
                    if not thr < v_next:
                        thr = v_here
                    if _better(child, f, thr, best_imp, best_f, best_thr):
                        best_imp = child
                        best_f = f
                        best_thr = thr

        if best_f < 0:
            continue

        # partition idx[start:end] so rows going left come first
        xf = XT[best_f]
        i = start
        j = end - 1
        while i <= j:
            if xf[idx[i]] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i

        feature[node] = best_f
        threshold[node] = best_thr
        importance[best_f] += n_w * (imp - best_imp)

        # push right first so the left child gets the next node id
        stack[top, 0] = mid
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1
        stack[top, 0] = start
        stack[top, 1] = mid
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
        importance,
    )


@njit(cache=True, nogil=True)
def predict_forest(X, feature, threshold, left, right, leaf_proba, roots):
    """Mean class-1 leaf frequency over trees. Child indices are absolute."""
    n = X.shape[0]
    out = np.zeros(n)
    n_trees = roots.shape[0]
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            node = roots[t]
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += leaf_proba[node]
        out[i] = acc / n_trees
    return out
