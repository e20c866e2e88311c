"""Random-forest internals: JIT-compiled tree growth over CSC columns.

Trees are grown depth-first on bootstrap multiplicities (unique rows carry
integer weights), splitting by weighted Gini over a per-node random subset
of candidate features. Thresholds are midpoints of sorted observed values;
rows absent from a column count as zeros, so sparse columns never get
densified. Ties break toward the lowest feature index, then the lowest
threshold, which keeps training bitwise deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import sparse

_SM64_A = np.uint64(0x9E3779B97F4A7C15)
_SM64_B = np.uint64(0xBF58476D1CE4E5B9)
_SM64_C = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _rand_below(state, n):
    # splitmix64 step; modulo bias is irrelevant at these ranges
    state[0] = state[0] + _SM64_A
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _SM64_B
    z = (z ^ (z >> np.uint64(27))) * _SM64_C
    z = z ^ (z >> np.uint64(31))
    return np.int64(z % np.uint64(n))


@njit(cache=True)
def _weighted_gini(w, pos):
    if w <= 0.0:
        return 0.0
    p = pos / w
    q = 1.0 - p
    return 1.0 - p * p - q * q


@njit(cache=True)
def _grow_tree(csc_indptr, csc_indices, csc_data, n_total_rows,
               rows, weights, labels, max_depth, mtry, seed):
    """Grow one tree; returns trimmed node arrays (feature -1 marks a leaf)."""
    n_features = csc_indptr.shape[0] - 1
    m = rows.shape[0]
    cap = 2 * m + 1

    feat = np.full(cap, -1, np.int64)
    thr = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    pos_w = np.zeros(cap, np.float64)
    neg_w = np.zeros(cap, np.float64)

    # order holds local indices into rows/weights/labels, partitioned in place
    order = np.arange(m)
    pos_in_node = np.full(n_total_rows, -1, np.int64)

    mvals = np.empty(m, np.float64)
    mw = np.empty(m, np.float64)
    mp = np.empty(m, np.float64)
    svals = np.empty(m, np.float64)
    sw = np.empty(m, np.float64)
    sp = np.empty(m, np.float64)
    side = np.empty(m, np.uint8)
    tmp = np.empty(m, np.int64)
    perm = np.arange(n_features)
    cand = np.empty(mtry, np.int64)

    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)

    stack_node = np.empty(cap, np.int64)
    stack_start = np.empty(cap, np.int64)
    stack_end = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)

    n_nodes = 1
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = m
    stack_depth[0] = 0

    while top >= 0:
        node_id = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        top -= 1

        n = end - start
        tot_w = 0.0
        tot_p = 0.0
        for i in range(start, end):
            p = order[i]
            pos_in_node[rows[p]] = i - start
            tot_w += weights[p]
            if labels[p] == 1:
                tot_p += weights[p]
        pos_w[node_id] = tot_p
        neg_w[node_id] = tot_w - tot_p

        best_feat = np.int64(-1)
        best_thr = 0.0
        if depth < max_depth and n >= 2 and 0.0 < tot_p < tot_w:
            parent_gini = _weighted_gini(tot_w, tot_p)
            best_gain = 0.0
            for i in range(mtry):
                j = i + _rand_below(state, n_features - i)
                swap = perm[i]
                perm[i] = perm[j]
                perm[j] = swap
                cand[i] = perm[i]
            cand_sorted = np.sort(cand)
            for ci in range(mtry):
                f = cand_sorted[ci]
                k = 0
                mw_sum = 0.0
                mp_sum = 0.0
                for e in range(csc_indptr[f], csc_indptr[f + 1]):
                    lp = pos_in_node[csc_indices[e]]
                    if lp >= 0:
                        gp = order[start + lp]
                        mvals[k] = csc_data[e]
                        mw[k] = weights[gp]
                        mp[k] = weights[gp] if labels[gp] == 1 else 0.0
                        mw_sum += mw[k]
                        mp_sum += mp[k]
                        k += 1
                if k == 0:
                    continue  # column constant (all implicit zeros) in this node
                zero_w = tot_w - mw_sum
                zero_p = tot_p - mp_sum
                ord_idx = np.argsort(mvals[:k])
                for i2 in range(k):
                    svals[i2] = mvals[ord_idx[i2]]
                    sw[i2] = mw[ord_idx[i2]]
                    sp[i2] = mp[ord_idx[i2]]
                # ascending scan over distinct observed values, merging the
                # implicit zero block in at value 0.0
                left_w = 0.0
                left_p = 0.0
                idx = 0
                zero_done = zero_w <= 0.0
                has_prev = False
                prev_v = 0.0
                while idx < k or not zero_done:
                    if not zero_done and (idx >= k or svals[idx] >= 0.0):
                        v = 0.0
                        gw = zero_w
                        gp2 = zero_p
                        zero_done = True
                        while idx < k and svals[idx] == 0.0:
                            gw += sw[idx]
                            gp2 += sp[idx]
                            idx += 1
                    else:
                        v = svals[idx]
                        gw = 0.0
                        gp2 = 0.0
                        while idx < k and svals[idx] == v:
                            gw += sw[idx]
                            gp2 += sp[idx]
                            idx += 1
                    if has_prev:
                        right_w = tot_w - left_w
                        right_p = tot_p - left_p
                        child = (left_w * _weighted_gini(left_w, left_p)
                                 + right_w * _weighted_gini(right_w, right_p)) / tot_w
                        gain = parent_gini - child
                        if gain > best_gain:
                            best_gain = gain
                            best_feat = f
                            best_thr = 0.5 * (prev_v + v)
                    left_w += gw
                    left_p += gp2
                    prev_v = v
                    has_prev = True

        if best_feat < 0:
            for i in range(start, end):
                pos_in_node[rows[order[i]]] = -1
            continue

        feat[node_id] = best_feat
        thr[node_id] = best_thr

        zero_left = np.uint8(1) if 0.0 <= best_thr else np.uint8(0)
        for i in range(n):
            side[i] = zero_left
        for e in range(csc_indptr[best_feat], csc_indptr[best_feat + 1]):
            lp = pos_in_node[csc_indices[e]]
            if lp >= 0:
                side[lp] = np.uint8(1) if csc_data[e] <= best_thr else np.uint8(0)

        nl = 0
        for i in range(n):
            if side[i] == 1:
                tmp[nl] = order[start + i]
                nl += 1
        nr = nl
        for i in range(n):
            if side[i] == 0:
                tmp[nr] = order[start + i]
                nr += 1
        for i in range(n):
            order[start + i] = tmp[i]
        for i in range(start, end):
            pos_in_node[rows[order[i]]] = -1

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[node_id] = left_id
        right[node_id] = right_id
        top += 1
        stack_node[top] = right_id
        stack_start[top] = start + nl
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = left_id
        stack_start[top] = start
        stack_end[top] = start + nl
        stack_depth[top] = depth + 1

    return (feat[:n_nodes].copy(), thr[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), pos_w[:n_nodes].copy(), neg_w[:n_nodes].copy())


@njit(cache=True)
def _forest_votes(csr_indptr, csr_indices, csr_data,
                  feat, thr, left, right, pos_w, neg_w, offsets):
    """Positive-class vote fraction per row; rows go left when value <= threshold."""
    n_rows = csr_indptr.shape[0] - 1
    n_trees = offsets.shape[0] - 1
    votes = np.zeros(n_rows, np.float64)
    for r in range(n_rows):
        lo = csr_indptr[r]
        hi = csr_indptr[r + 1]
        for t in range(n_trees):
            base = offsets[t]
            node = np.int64(0)
            while feat[base + node] >= 0:
                f = feat[base + node]
                v = 0.0
                a = lo
                b = hi
                while a < b:
                    mid = (a + b) >> 1
                    if csr_indices[mid] < f:
                        a = mid + 1
                    else:
                        b = mid
                if a < hi and csr_indices[a] == f:
                    v = csr_data[a]
                if v <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            if pos_w[base + node] > neg_w[base + node]:
                votes[r] += 1.0
    return votes / n_trees


@dataclass
class ForestModel:
    """Flattened node arrays of all trees; offsets[t] is tree t's base node."""

    n_trees: int
    dim: int
    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    pos_w: np.ndarray
    neg_w: np.ndarray
    offsets: np.ndarray


def train_forest(X, y, *, n_trees: int, max_depth: int, mtry: int | None = None,
                 seed: int = 0, bootstrap: bool = True) -> ForestModel:
    """Grow ``n_trees`` trees on bootstrap samples of the rows of X (CSR).

    With ``bootstrap=False`` every tree sees all rows with weight one, which
    makes single trees directly comparable against an exhaustive split
    oracle in tests.
    """
    X = sparse.csr_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    n_rows, dim = X.shape
    if mtry is None:
        mtry = max(1, int(round(np.sqrt(dim))))
    mtry = min(mtry, dim)

    csc = X.tocsc()
    csc_indptr = csc.indptr.astype(np.int64)
    csc_indices = csc.indices.astype(np.int64)
    csc_data = csc.data.astype(np.float64)

    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(n_trees):
        if bootstrap:
            counts = np.bincount(rng.integers(0, n_rows, n_rows), minlength=n_rows)
            rows = np.flatnonzero(counts).astype(np.int64)
            weights = counts[rows].astype(np.float64)
        else:
            rows = np.arange(n_rows, dtype=np.int64)
            weights = np.ones(n_rows, dtype=np.float64)
        tree_seed = int(rng.integers(1, 2**63 - 1))
        parts.append(_grow_tree(csc_indptr, csc_indices, csc_data, n_rows,
                                rows, weights, y[rows], max_depth, mtry, tree_seed))

    sizes = [p[0].shape[0] for p in parts]
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    return ForestModel(
        n_trees=n_trees,
        dim=dim,
        feat=np.concatenate([p[0] for p in parts]),
        thr=np.concatenate([p[1] for p in parts]),
        left=np.concatenate([p[2] for p in parts]),
        right=np.concatenate([p[3] for p in parts]),
        pos_w=np.concatenate([p[4] for p in parts]),
        neg_w=np.concatenate([p[5] for p in parts]),
        offsets=offsets,
    )


def forest_votes(model: ForestModel, X) -> np.ndarray:
    """Fraction of trees voting for the positive class, exactly votes / n_trees."""
    X = sparse.csr_matrix(X)
    if X.shape[1] != model.dim:
        raise ValueError(f"feature dimension {X.shape[1]} does not match training dimension {model.dim}")
    return _forest_votes(
        X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data.astype(np.float64),
        model.feat, model.thr, model.left, model.right,
        model.pos_w, model.neg_w, model.offsets,
    )
