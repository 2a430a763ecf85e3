"""Compiled inner loops for histogram tree growth.

Per-feature work runs under ``prange``; each feature's histogram and best split
are computed by a single thread in sample order and the cross-feature reduction
is sequential, so results do not depend on the thread count.
"""

import os

import numba
import numpy as np
from numba import prange

# prefer OpenMP over the TBB probe (an outdated system TBB only yields a warning)
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

GAIN_EPS = 1e-12


@numba.njit(cache=True)
def _soft_threshold(g, l1):
    if g > l1:
        return g - l1
    if g < -l1:
        return g + l1
    return 0.0


@numba.njit(cache=True)
def leaf_weight(G, H, l1, l2, lo, hi):
    denom = H + l2
    w = 0.0
    if denom > 0.0:
        w = -_soft_threshold(G, l1) / denom
    if w < lo:
        w = lo
    if w > hi:
        w = hi
    return w


@numba.njit(cache=True)
def _objective(G, H, l1, l2, w):
    return G * w + 0.5 * (H + l2) * w * w + l1 * abs(w)


@numba.njit(parallel=True, cache=True)
def _histograms(Xb, grad, hess, sample_slot, n_slots, n_bins_max):
    p, n = Xb.shape
    hg = np.zeros((n_slots, p, n_bins_max))
    hh = np.zeros((n_slots, p, n_bins_max))
    hc = np.zeros((n_slots, p, n_bins_max), dtype=np.int64)
    for f in prange(p):
        for i in range(n):
            s = sample_slot[i]
            if s >= 0:
                b = Xb[f, i]
                hg[s, f, b] += grad[i]
                hh[s, f, b] += hess[i]
                hc[s, f, b] += 1
    return hg, hh, hc


@numba.njit(parallel=True, cache=True)
def _feature_best(
    hg, hh, hc, n_bins, mono, allowed, slot_G, slot_H, slot_C, slot_lo, slot_hi,
    l1, l2, min_leaf,
):
    n_slots, p, _ = hg.shape
    best_gain = np.full((n_slots, p), -np.inf)
    best_bin = np.full((n_slots, p), -1, dtype=np.int64)
    best_wl = np.zeros((n_slots, p))
    best_wr = np.zeros((n_slots, p))
    for f in prange(p):
        for s in range(n_slots):
            if not allowed[s, f] or n_bins[f] < 2:
                continue
            G, H, C = slot_G[s], slot_H[s], slot_C[s]
            lo, hi = slot_lo[s], slot_hi[s]
            parent_obj = _objective(G, H, l1, l2, leaf_weight(G, H, l1, l2, lo, hi))
            GL = 0.0
            HL = 0.0
            CL = 0
            for b in range(n_bins[f] - 1):
                GL += hg[s, f, b]
                HL += hh[s, f, b]
                CL += hc[s, f, b]
                CR = C - CL
                if CL < min_leaf or CL == 0:
                    continue
                if CR < min_leaf or CR == 0:
                    break
                GR = G - GL
                HR = H - HL
                wl = leaf_weight(GL, HL, l1, l2, lo, hi)
                wr = leaf_weight(GR, HR, l1, l2, lo, hi)
                if mono[f] > 0 and wl > wr:
                    continue
                if mono[f] < 0 and wl < wr:
                    continue
                gain = parent_obj - _objective(GL, HL, l1, l2, wl) - _objective(GR, HR, l1, l2, wr)
                if gain > best_gain[s, f]:
                    best_gain[s, f] = gain
                    best_bin[s, f] = b
                    best_wl[s, f] = wl
                    best_wr[s, f] = wr
    return best_gain, best_bin, best_wl, best_wr


@numba.njit(cache=True)
def grow_tree(Xb, grad, hess, n_bins, mono, allow_sets, use_allow, max_depth, min_leaf, l1, l2, min_gain):
    """Depth-wise growth of one Newton tree on binned data.

    Returns flat node arrays (split feature or -1, bin threshold, children,
    leaf value) and the leaf node reached by each training sample. A sample
    goes left iff its bin index is <= the node's bin threshold.
    """
    p, n = Xb.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    n_bins_max = 1
    for f in range(p):
        n_bins_max = max(n_bins_max, n_bins[f])

    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes, dtype=np.int64)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)
    lower = np.full(max_nodes, -np.inf)
    upper = np.full(max_nodes, np.inf)
    node_G = np.zeros(max_nodes)
    node_H = np.zeros(max_nodes)
    node_C = np.zeros(max_nodes, dtype=np.int64)
    used = np.zeros((max_nodes, p), dtype=np.bool_)

    G0 = 0.0
    H0 = 0.0
    for i in range(n):
        G0 += grad[i]
        H0 += hess[i]
    node_G[0] = G0
    node_H[0] = H0
    node_C[0] = n
    value[0] = leaf_weight(G0, H0, l1, l2, -np.inf, np.inf)
    node_of = np.zeros(n, dtype=np.int64)

    level = np.zeros(1, dtype=np.int64)
    n_nodes = 1
    for depth in range(max_depth):
        # nodes at this level large enough to split
        slot_of = np.full(max_nodes, -1, dtype=np.int64)
        n_slots = 0
        for node in level:
            if node_C[node] >= 2 * max(min_leaf, 1):
                slot_of[node] = n_slots
                n_slots += 1
        if n_slots == 0:
            break
        slot_nodes = np.empty(n_slots, dtype=np.int64)
        for node in level:
            if slot_of[node] >= 0:
                slot_nodes[slot_of[node]] = node

        allowed = np.ones((n_slots, p), dtype=np.bool_)
        if use_allow:
            for s in range(n_slots):
                node = slot_nodes[s]
                for f in range(p):
                    allowed[s, f] = False
                for a in range(allow_sets.shape[0]):
                    subset = True
                    for f in range(p):
                        if used[node, f] and not allow_sets[a, f]:
                            subset = False
                            break
                    if subset:
                        for f in range(p):
                            if allow_sets[a, f]:
                                allowed[s, f] = True

        sample_slot = np.empty(n, dtype=np.int64)
        for i in range(n):
            sample_slot[i] = slot_of[node_of[i]]
        hg, hh, hc = _histograms(Xb, grad, hess, sample_slot, n_slots, n_bins_max)

        slot_G = np.empty(n_slots)
        slot_H = np.empty(n_slots)
        slot_C = np.empty(n_slots, dtype=np.int64)
        slot_lo = np.empty(n_slots)
        slot_hi = np.empty(n_slots)
        for s in range(n_slots):
            node = slot_nodes[s]
            slot_G[s] = node_G[node]
            slot_H[s] = node_H[node]
            slot_C[s] = node_C[node]
            slot_lo[s] = lower[node]
            slot_hi[s] = upper[node]
        gains, bins, wls, wrs = _feature_best(
            hg, hh, hc, n_bins, mono, allowed, slot_G, slot_H, slot_C, slot_lo, slot_hi,
            l1, l2, min_leaf,
        )

        next_level = np.empty(2 * n_slots, dtype=np.int64)
        n_next = 0
        for s in range(n_slots):
            node = slot_nodes[s]
            best_f = -1
            best_gain = -np.inf
            for f in range(p):
                if gains[s, f] > best_gain:
                    best_gain = gains[s, f]
                    best_f = f
            if best_f < 0 or not (best_gain > min_gain) or not (best_gain > GAIN_EPS):
                continue
            f = best_f
            b = bins[s, f]
            lc = n_nodes
            rc = n_nodes + 1
            n_nodes += 2
            feature[node] = f
            threshold[node] = b
            left[node] = lc
            right[node] = rc
            GL = 0.0
            HL = 0.0
            CL = 0
            for bb in range(b + 1):
                GL += hg[s, f, bb]
                HL += hh[s, f, bb]
                CL += hc[s, f, bb]
            node_G[lc] = GL
            node_H[lc] = HL
            node_C[lc] = CL
            node_G[rc] = node_G[node] - GL
            node_H[rc] = node_H[node] - HL
            node_C[rc] = node_C[node] - CL
            value[lc] = wls[s, f]
            value[rc] = wrs[s, f]
            lower[lc] = lower[node]
            upper[lc] = upper[node]
            lower[rc] = lower[node]
            upper[rc] = upper[node]
            if mono[f] != 0:
                mid = 0.5 * (wls[s, f] + wrs[s, f])
                if mono[f] > 0:
                    upper[lc] = mid
                    lower[rc] = mid
                else:
                    lower[lc] = mid
                    upper[rc] = mid
            for g in range(p):
                used[lc, g] = used[node, g]
                used[rc, g] = used[node, g]
            used[lc, f] = True
            used[rc, f] = True
            next_level[n_next] = lc
            next_level[n_next + 1] = rc
            n_next += 2
        if n_next == 0:
            break
        for i in range(n):
            node = node_of[i]
            if feature[node] >= 0:
                if Xb[feature[node], i] <= threshold[node]:
                    node_of[i] = left[node]
                else:
                    node_of[i] = right[node]
        level = next_level[:n_next]

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes], node_of


@numba.njit(cache=True)
def route_binned(Xb, feature, threshold, left, right):
    n = Xb.shape[1]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if Xb[feature[node], i] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
