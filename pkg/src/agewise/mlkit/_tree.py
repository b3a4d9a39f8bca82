"""Numba kernels for variance-reduction regression trees on binned features."""

import numpy as np
from numba import njit

SMALL_NODE = 40


def bin_edges(X, max_bins=255):
    """Per-column split thresholds: midpoints between (quantiles of) unique values."""
    edges = []
    for j in range(X.shape[1]):
        u = np.unique(X[:, j])
        if len(u) > max_bins:
            q = np.linspace(0, len(u) - 1, max_bins).round().astype(int)
            u = np.unique(u[q])
        edges.append(((u[:-1] + u[1:]) / 2.0) if len(u) > 1 else np.empty(0))
    return edges


def apply_bins(X, edges):
    out = np.empty(X.shape, dtype=np.uint8)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, X[:, j], side="left")
    return out


@njit(cache=True)
def _best_split_hist(Xb, y, idx, start, end, nbins, min_leaf, cnt, sm):
    n = end - start
    total = 0.0
    for k in range(start, end):
        total += y[idx[k]]
    parent = total * total / n
    best_gain = 1e-12 * (1.0 + abs(parent))
    best_f = -1
    best_t = -1
    for f in range(Xb.shape[1]):
        nb = nbins[f]
        if nb < 2:
            continue
        for b in range(nb):
            cnt[b] = 0
            sm[b] = 0.0
        for k in range(start, end):
            i = idx[k]
            b = Xb[i, f]
            cnt[b] += 1
            sm[b] += y[i]
        nl = 0
        sl = 0.0
        for b in range(nb - 1):
            nl += cnt[b]
            sl += sm[b]
            if cnt[b] == 0:
                continue
            nr = n - nl
            if nl < min_leaf:
                continue
            if nr < min_leaf:
                break
            sr = total - sl
            gain = sl * sl / nl + sr * sr / nr - parent
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_t = b
    return best_f, best_t


@njit(cache=True)
def _best_split_sort(Xb, y, idx, start, end, min_leaf, vals, ys):
    n = end - start
    total = 0.0
    for k in range(start, end):
        total += y[idx[k]]
    parent = total * total / n
    best_gain = 1e-12 * (1.0 + abs(parent))
    best_f = -1
    best_t = -1
    for f in range(Xb.shape[1]):
        for k in range(n):
            i = idx[start + k]
            v = Xb[i, f]
            yy = y[i]
            m = k
            # insertion sort keeps equal bins in sample order
            while m > 0 and vals[m - 1] > v:
                vals[m] = vals[m - 1]
                ys[m] = ys[m - 1]
                m -= 1
            vals[m] = v
            ys[m] = yy
        if vals[0] == vals[n - 1]:
            continue
        sl = 0.0
        for k in range(n - 1):
            sl += ys[k]
            if vals[k] == vals[k + 1]:
                continue
            nl = k + 1
            nr = n - nl
            if nl < min_leaf:
                continue
            if nr < min_leaf:
                break
            sr = total - sl
            gain = sl * sl / nl + sr * sr / nr - parent
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_t = vals[k]
    return best_f, best_t


@njit(cache=True)
def build_tree(Xb, y, idx, nbins, max_depth, min_leaf, min_split):
    """Grow one tree over samples ``idx`` (duplicates allowed, e.g. bootstrap).

    Returns (feature, bin_threshold, left, right, value, n_nodes); leaves
    have feature -1.  ``max_depth < 0`` means unlimited.
    """
    m = idx.shape[0]
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int32)
    thr = np.zeros(cap, dtype=np.int32)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)
    work = idx.copy()
    tmp = np.empty(m, dtype=work.dtype)
    cnt = np.zeros(256, dtype=np.int64)
    sm = np.zeros(256, dtype=np.float64)
    vals = np.zeros(SMALL_NODE + 1, dtype=np.uint8)
    ys = np.zeros(SMALL_NODE + 1, dtype=np.float64)

    st_node = np.empty(cap, dtype=np.int32)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int32)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        n = end - start
        s = 0.0
        for k in range(start, end):
            s += y[work[k]]
        value[node] = s / n
        if n < min_split or n < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        if n <= SMALL_NODE:
            f, t = _best_split_sort(Xb, y, work, start, end, min_leaf, vals, ys)
        else:
            f, t = _best_split_hist(Xb, y, work, start, end, nbins, min_leaf, cnt, sm)
        if f < 0:
            continue
        # stable partition
        lo = start
        nr = 0
        for k in range(start, end):
            i = work[k]
            if Xb[i, f] <= t:
                work[lo] = i
                lo += 1
            else:
                tmp[nr] = i
                nr += 1
        for k in range(nr):
            work[lo + k] = tmp[k]
        feature[node] = f
        thr[node] = t
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is numbered first
        st_node[top] = rnode
        st_start[top] = lo
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lnode
        st_start[top] = start
        st_end[top] = lo
        st_depth[top] = depth + 1
        top += 1
    return (feature[:n_nodes].copy(), thr[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), n_nodes)


@njit(cache=True)
def predict_binned(Xb, feature, thr, left, right, value, offsets, weights, out):
    """out += sum_t weights[t] * tree_t(x) for trees stored back to back."""
    for i in range(Xb.shape[0]):
        acc = 0.0
        for t in range(offsets.shape[0] - 1):
            base = offsets[t]
            node = 0
            while feature[base + node] >= 0:
                if Xb[i, feature[base + node]] <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            acc += weights[t] * value[base + node]
        out[i] += acc
    return out
