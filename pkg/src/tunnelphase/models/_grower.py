"""Exact-greedy regression tree grower (numba kernels).

One grower serves every tree family.  Each sample carries a gradient ``g`` and
hessian ``h``; a leaf's value is ``-G / (H + lam)`` and a split's gain is

    G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)

For plain regression trees pass g = -w*y, h = w (w = bootstrap multiplicity)
and lam = 0: the leaf value is then the weighted mean and the gain is the
reduction in squared error.

Samples with h == 0 are inactive.  Every node owns one contiguous segment in
each of the per-feature presorted index arrays; splitting a node stably
partitions those segments, so the sort order is never recomputed.
"""

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True)
def grow(
    X,
    g,
    h,
    order,
    max_depth,
    min_child_weight,
    lam,
    min_split_gain,
    max_features,
    random_thresholds,
    seed,
):
    """Grow one tree.

    ``order`` has shape (n_features, m): for each feature the indices of the
    m active samples sorted by that feature (ties by index).  Returns the node arrays (feature, threshold, left, right,
    value, count, gain), trimmed to the number of nodes built.
    """
    np.random.seed(seed)
    n_features, m = order.shape
    cap = 2 ** (max_depth + 1) - 1
    if cap > 2 * m + 1:
        cap = 2 * m + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap)
    gain_out = np.zeros(cap)
    seg_start = np.zeros(cap, dtype=np.int64)
    seg_end = np.zeros(cap, dtype=np.int64)
    depth = np.zeros(cap, dtype=np.int64)
    done = np.zeros(cap, dtype=np.bool_)

    seg_end[0] = m
    n_nodes = 1
    goes_left = np.zeros(X.shape[0], dtype=np.bool_)
    perm = np.arange(n_features)
    # sorted feature values travel with the index order; nodes at even depth
    # read buffer 0 and write their children's segments into buffer 1, and
    # vice versa, so partitioning needs no copy back
    idx = np.empty((2, n_features, m), dtype=np.int64)
    xs = np.empty((2, n_features, m))
    idx[0] = order
    for f in range(n_features):
        for k in range(m):
            xs[0, f, k] = X[order[f, k], f]

    node = 0
    while node < n_nodes:
        if done[node]:
            node += 1
            continue
        s = seg_start[node]
        e = seg_end[node]
        cur = depth[node] % 2
        nxt = 1 - cur
        G = 0.0
        H = 0.0
        scale = 0.0
        idx_0 = idx[cur, 0]
        for k in range(s, e):
            i = idx_0[k]
            G += g[i]
            H += h[i]
            scale += g[i] * g[i] / h[i]
        value[node] = -G / (H + lam)
        count[node] = H
        parent_score = G * G / (H + lam)

        if depth[node] >= max_depth or e - s < 2 or H < 2.0 * min_child_weight:
            node += 1
            continue

        # candidate features: random subset, scanned in ascending index order
        n_cand = n_features
        for k in range(n_features):
            perm[k] = k
        if max_features < n_features:
            for k in range(max_features):
                j = k + np.random.randint(0, n_features - k)
                tmp = perm[k]
                perm[k] = perm[j]
                perm[j] = tmp
            n_cand = max_features
            perm[:n_cand] = np.sort(perm[:n_cand])

        best_gain = -np.inf
        best_f = -1
        best_pos = -1
        best_thr = 0.0
        best_gl = 0.0
        best_hl = 0.0
        for c in range(n_cand):
            f = perm[c]
            if random_thresholds:
                xmin = xs[cur, f, s]
                xmax = xs[cur, f, e - 1]
                u = np.random.random()
                if xmin == xmax:
                    continue
                thr = xmin + u * (xmax - xmin)
                if thr >= xmax:
                    thr = xmin
                GL = 0.0
                HL = 0.0
                pos = s
                while pos < e and xs[cur, f, pos] <= thr:
                    i = idx[cur, f, pos]
                    GL += g[i]
                    HL += h[i]
                    pos += 1
                HR = H - HL
                if HL < min_child_weight or HR < min_child_weight:
                    continue
                GR = G - GL
                gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent_score
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_pos = pos
                    best_thr = thr
                    best_gl = GL
                    best_hl = HL
            else:
                GL = 0.0
                HL = 0.0
                idx_f = idx[cur, f]
                xs_f = xs[cur, f]
                for k in range(s, e - 1):
                    i = idx_f[k]
                    GL += g[i]
                    HL += h[i]
                    x0 = xs_f[k]
                    x1 = xs_f[k + 1]
                    if x1 <= x0 or HL < min_child_weight:
                        continue
                    HR = H - HL
                    if HR < min_child_weight:
                        continue
                    GR = G - GL
                    # one division: GL^2/(HL+lam) + GR^2/(HR+lam) over a common denominator
                    dl = HL + lam
                    dr = HR + lam
                    gain = (GL * GL * dr + GR * GR * dl) / (dl * dr) - parent_score
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_pos = k + 1
                        best_gl = GL
                        best_hl = HL
                        thr = 0.5 * (x0 + x1)
                        if thr >= x1:
                            thr = x0
                        best_thr = thr

        if best_f < 0 or best_gain <= min_split_gain + 1e-12 * scale:
            node += 1
            continue

        n_left = best_pos - s
        # children that can never split need no partitioned segments
        child_depth = depth[node] + 1
        terminal = child_depth >= max_depth or (
            (n_left < 2 or best_hl < 2.0 * min_child_weight)
            and (e - best_pos < 2 or H - best_hl < 2.0 * min_child_weight)
        )
        if terminal:
            li = n_nodes
            ri = n_nodes + 1
            n_nodes += 2
            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = li
            right[node] = ri
            gain_out[node] = best_gain
            value[li] = -best_gl / (best_hl + lam)
            count[li] = best_hl
            value[ri] = -(G - best_gl) / (H - best_hl + lam)
            count[ri] = H - best_hl
            done[li] = True
            done[ri] = True
            node += 1
            continue

        for k in range(s, e):
            goes_left[idx[cur, best_f, k]] = k < best_pos
        for f in range(n_features):
            a = s
            b = s + n_left
            src_i = idx[cur, f]
            src_x = xs[cur, f]
            dst_i = idx[nxt, f]
            dst_x = xs[nxt, f]
            for k in range(s, e):
                i = src_i[k]
                gl = goes_left[i]
                # branchless: the side is data dependent and unpredictable
                pos = a if gl else b
                dst_i[pos] = i
                dst_x[pos] = src_x[k]
                a += gl
                b += 1 - gl

        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = li
        right[node] = ri
        gain_out[node] = best_gain
        seg_start[li] = s
        seg_end[li] = s + n_left
        seg_start[ri] = s + n_left
        seg_end[ri] = e
        depth[li] = depth[node] + 1
        depth[ri] = depth[node] + 1
        node += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
        gain_out[:n_nodes].copy(),
    )


@njit(cache=True)
def predict_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for r in range(n):
        node = 0
        while feature[node] != LEAF:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@njit(cache=True)
def active_order(presorted, active):
    """Filter each presorted row down to active samples, keeping the order."""
    n_features, n = presorted.shape
    m = 0
    for i in range(n):
        if active[i]:
            m += 1
    out = np.empty((n_features, m), dtype=np.int64)
    for f in range(n_features):
        k = 0
        for j in range(n):
            i = presorted[f, j]
            if active[i]:
                out[f, k] = i
                k += 1
    return out


def presort(X):
    """Per-feature stable argsort, shape (n_features, n)."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
