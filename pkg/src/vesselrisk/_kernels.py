"""Numba kernels: CART growth, leaf lookup, and per-tree SHAP recursion.

Trees are flat parallel arrays; children of -1 mark leaves. `cover` is the
bootstrap training-sample count reaching each node and drives the
path-dependent conditional expectations. The RNG is splitmix64 so a tree's
stream depends only on (master seed, tree index), never on scheduling.
"""

import numpy as np
from numba import njit

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _rng_next(state):
    state[0] = state[0] + _U64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True)
def _rand_below(state, n):
    return np.int64(_rng_next(state) % _U64(n))


@njit(cache=True)
def _gini(counts, total):
    s = 0.0
    for c in range(counts.shape[0]):
        p = counts[c] / total
        s += p * p
    return 1.0 - s


@njit(cache=True)
def build_tree(X, y, n_classes, max_depth, min_leaf, mtry, bootstrap, seed):
    """Grow one CART tree; returns flat arrays truncated to the node count.

    Split candidates are midpoints of consecutive distinct sorted values;
    ties in Gini decrease resolve to the lowest feature index then lowest
    threshold (features scanned ascending, thresholds ascending, strict
    improvement required).
    """
    n, m = X.shape
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed

    idx = np.empty(n, dtype=np.int64)
    if bootstrap:
        for i in range(n):
            idx[i] = _rand_below(state, n)
    else:
        for i in range(n):
            idx[i] = i

    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes), dtype=np.float64)
    cover = np.zeros(cap, dtype=np.float64)

    # stack frames: node, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    max_depth_seen = 0

    feat_pool = np.empty(m, dtype=np.int64)
    counts = np.empty(n_classes, dtype=np.float64)
    left_counts = np.empty(n_classes, dtype=np.float64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        if depth > max_depth_seen:
            max_depth_seen = depth
        n_node = end - start

        for c in range(n_classes):
            counts[c] = 0.0
        for i in range(start, end):
            counts[y[idx[i]]] += 1.0
        cover[node] = n_node
        for c in range(n_classes):
            value[node, c] = counts[c] / n_node

        pure = False
        for c in range(n_classes):
            if counts[c] == n_node:
                pure = True
        if pure or n_node < 2 * min_leaf or (max_depth > 0 and depth >= max_depth):
            continue

        parent_gini = _gini(counts, n_node)

        # sample mtry distinct features, then scan them in ascending order
        for j in range(m):
            feat_pool[j] = j
        k_feats = mtry if mtry < m else m
        for j in range(k_feats):
            pick = j + _rand_below(state, m - j)
            tmp = feat_pool[j]
            feat_pool[j] = feat_pool[pick]
            feat_pool[pick] = tmp
        chosen = np.sort(feat_pool[:k_feats])

        best_gain = 1e-12
        best_feat = -1
        best_thr = 0.0

        vals = np.empty(n_node, dtype=np.float64)
        labs = np.empty(n_node, dtype=np.int64)
        for jj in range(k_feats):
            f = chosen[jj]
            for i in range(n_node):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals)
            for c in range(n_classes):
                left_counts[c] = 0.0
            prev = vals[order[0]]
            for i in range(n_node):
                labs[i] = y[idx[start + order[i]]]
            sorted_vals = vals[order]
            for p in range(1, n_node):
                left_counts[labs[p - 1]] += 1.0
                v = sorted_vals[p]
                if v == sorted_vals[p - 1]:
                    continue
                if p < min_leaf or n_node - p < min_leaf:
                    continue
                nl = float(p)
                nr = float(n_node - p)
                gl = _gini(left_counts, nl)
                gr = 0.0
                s = 0.0
                for c in range(n_classes):
                    rc = counts[c] - left_counts[c]
                    pr = rc / nr
                    s += pr * pr
                gr = 1.0 - s
                gain = parent_gini - (nl / n_node) * gl - (nr / n_node) * gr
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    thr = 0.5 * (sorted_vals[p - 1] + v)
                    # midpoint of two adjacent floats can round up to the
                    # larger one; fall back so the split stays non-empty
                    if thr >= v:
                        thr = sorted_vals[p - 1]
                    best_thr = thr

        if best_feat < 0:
            continue

        # partition idx[start:end] by the chosen split (stable)
        buf = np.empty(n_node, dtype=np.int64)
        n_left = 0
        for i in range(start, end):
            if X[idx[i], best_feat] <= best_thr:
                buf[n_left] = idx[i]
                n_left += 1
        n_right = n_left
        for i in range(start, end):
            if X[idx[i], best_feat] > best_thr:
                buf[n_right] = idx[i]
                n_right += 1
        for i in range(n_node):
            idx[start + i] = buf[i]

        feature[node] = best_feat
        threshold[node] = best_thr
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[node] = left_id
        right[node] = right_id

        stack[top, 0] = right_id
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes].copy(), cover[:n_nodes], max_depth_seen)


@njit(cache=True)
def apply_tree(feature, threshold, left, right, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def tree_expected_value(feature, left, right, value, cover):
    """Cover-weighted mean of leaf distributions (the tree's base value)."""
    n_classes = value.shape[1]
    out = np.zeros(n_classes, dtype=np.float64)
    total = cover[0]
    for node in range(feature.shape[0]):
        if feature[node] < 0:
            for c in range(n_classes):
                out[c] += cover[node] / total * value[node, c]
    return out


@njit(cache=True)
def _extend(d, z, o, w, u, pz, po, pi):
    d[u] = pi
    z[u] = pz
    o[u] = po
    w[u] = 1.0 if u == 0 else 0.0
    for i in range(u - 1, -1, -1):
        w[i + 1] += po * w[i] * (i + 1.0) / (u + 1.0)
        w[i] = pz * w[i] * (u - i) / (u + 1.0)


@njit(cache=True)
def _unwind(d, z, o, w, u, i):
    oi = o[i]
    zi = z[i]
    nxt = w[u]
    if oi != 0.0:
        for j in range(u - 1, -1, -1):
            t = w[j]
            w[j] = nxt * (u + 1.0) / ((j + 1.0) * oi)
            nxt = t - w[j] * zi * (u - j) / (u + 1.0)
    else:
        for j in range(u - 1, -1, -1):
            w[j] = w[j] * (u + 1.0) / (zi * (u - j))
    for j in range(i, u):
        d[j] = d[j + 1]
        z[j] = z[j + 1]
        o[j] = o[j + 1]


@njit(cache=True)
def _unwound_sum(z, o, w, u, i):
    oi = o[i]
    zi = z[i]
    total = 0.0
    if oi != 0.0:
        nxt = w[u]
        for j in range(u - 1, -1, -1):
            t = nxt * (u + 1.0) / ((j + 1.0) * oi)
            total += t
            nxt = w[j] - t * zi * (u - j) / (u + 1.0)
    else:
        for j in range(u - 1, -1, -1):
            total += w[j] * (u + 1.0) / (zi * (u - j))
    return total


@njit(cache=True)
def tree_shap(feature, threshold, left, right, value, cover, x, n_features, max_path):
    """Path-dependent SHAP for one tree at one sample; phi is [n_features, n_classes]."""
    n_classes = value.shape[1]
    phi = np.zeros((n_features, n_classes), dtype=np.float64)

    P = max_path + 3
    pd = np.empty((P, P), dtype=np.int64)
    pz = np.empty((P, P), dtype=np.float64)
    po = np.empty((P, P), dtype=np.float64)
    pw = np.empty((P, P), dtype=np.float64)

    # frame: node, u (extend index), level, fz, fo, fi
    cap = 4 * P + 4
    f_node = np.empty(cap, dtype=np.int64)
    f_u = np.empty(cap, dtype=np.int64)
    f_level = np.empty(cap, dtype=np.int64)
    f_z = np.empty(cap, dtype=np.float64)
    f_o = np.empty(cap, dtype=np.float64)
    f_i = np.empty(cap, dtype=np.int64)

    f_node[0] = 0
    f_u[0] = 0
    f_level[0] = 0
    f_z[0] = 1.0
    f_o[0] = 1.0
    f_i[0] = -1
    top = 1

    while top > 0:
        top -= 1
        node = f_node[top]
        u = f_u[top]
        level = f_level[top]
        fz = f_z[top]
        fo = f_o[top]
        fi = f_i[top]

        # copy parent path (entries 0..u-1) into this level's row
        if level > 0:
            for j in range(u):
                pd[level, j] = pd[level - 1, j]
                pz[level, j] = pz[level - 1, j]
                po[level, j] = po[level - 1, j]
                pw[level, j] = pw[level - 1, j]
        _extend(pd[level], pz[level], po[level], pw[level], u, fz, fo, fi)

        if feature[node] < 0:
            for i in range(1, u + 1):
                s = _unwound_sum(pz[level], po[level], pw[level], u, i)
                scale = s * (po[level, i] - pz[level, i])
                fidx = pd[level, i]
                for c in range(n_classes):
                    phi[fidx, c] += scale * value[node, c]
            continue

        f = feature[node]
        if x[f] <= threshold[node]:
            hot, cold = left[node], right[node]
        else:
            hot, cold = right[node], left[node]
        hot_frac = cover[hot] / cover[node]
        cold_frac = cover[cold] / cover[node]

        iz = 1.0
        io = 1.0
        u_local = u
        k = -1
        for j in range(1, u + 1):
            if pd[level, j] == f:
                k = j
                break
        if k >= 0:
            iz = pz[level, k]
            io = po[level, k]
            _unwind(pd[level], pz[level], po[level], pw[level], u, k)
            u_local = u - 1

        # push cold then hot so hot is processed first (order irrelevant)
        f_node[top] = cold
        f_u[top] = u_local + 1
        f_level[top] = level + 1
        f_z[top] = iz * cold_frac
        f_o[top] = 0.0
        f_i[top] = f
        top += 1
        f_node[top] = hot
        f_u[top] = u_local + 1
        f_level[top] = level + 1
        f_z[top] = iz * hot_frac
        f_o[top] = io
        f_i[top] = f
        top += 1

    return phi
