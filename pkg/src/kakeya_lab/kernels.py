"""Hot inner loops.

Each kernel has a loop version compiled with numba and a fallback that runs
either the same loop in plain Python or an equivalent vectorised numpy
formulation.  ``USE_NUMBA`` (see :mod:`kakeya_lab._accel`) picks one.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, jit

# ---------------------------------------------------------------------------
# extremal search over one-point-per-fibre configurations
# ---------------------------------------------------------------------------


@jit
def _feasible(c, b, p, rv, rinf, used, distinct, cap):
    for k in range(rv.shape[0]):
        v = b if rinf[k] else (c + b + rv[k] * b) % p
        if used[k, v] == 0 and distinct[k] >= cap:
            return False
    return True


@jit
def _apply(c, b, p, rv, rinf, used, distinct, sign):
    for k in range(rv.shape[0]):
        v = b if rinf[k] else (c + b + rv[k] * b) % p
        if sign > 0:
            used[k, v] += 1
            if used[k, v] == 1:
                distinct[k] += 1
        else:
            used[k, v] -= 1
            if used[k, v] == 0:
                distinct[k] -= 1


@jit
def _admissible_remaining(depth, p, rv, rinf, used, distinct, cap):
    saturated = False
    for k in range(rv.shape[0]):
        if distinct[k] >= cap:
            saturated = True
            break
    if not saturated:
        return p - depth
    total = 0
    for c in range(depth, p):
        for b in range(p):
            if _feasible(c, b, p, rv, rinf, used, distinct, cap):
                total += 1
                break
    return total


@jit
def _dfs_loop(p, rv, rinf, cap, fixed, must, use_bound, budget):
    """Depth-first search over fibres ``c = a - b``; option ``o < p`` puts
    ``(o + c, o)`` in G, option ``p`` leaves the fibre empty.

    Returns ``(best, best_opts, nodes, complete)``.  The first configuration
    reaching a new maximum is kept, so the witness is the least one in
    option order among all maximisers.
    """
    K = rv.shape[0]
    used = np.zeros((K, p), dtype=np.int64)
    distinct = np.zeros(K, dtype=np.int64)
    opt = np.full(p, -1, dtype=np.int64)
    best = -1
    best_opts = np.full(p, p, dtype=np.int64)
    size = 0
    depth = 0
    nodes = 0
    complete = True
    while True:
        if depth == p:
            if size > best:
                best = size
                for i in range(p):
                    best_opts[i] = opt[i]
            depth -= 1
            if depth < 0:
                break
            if opt[depth] < p:
                _apply(depth, opt[depth], p, rv, rinf, used, distinct, -1)
                size -= 1
            continue
        cur = opt[depth]
        if fixed[depth] >= 0:
            o = fixed[depth] if cur == -1 else p + 1
            if o < p and not _feasible(depth, o, p, rv, rinf, used, distinct, cap):
                o = p + 1
        else:
            o = cur + 1
            while o < p and not _feasible(depth, o, p, rv, rinf, used, distinct, cap):
                o += 1
            if o == p and must[depth]:
                o = p + 1
        if o > p:
            opt[depth] = -1
            depth -= 1
            if depth < 0:
                break
            if opt[depth] < p:
                _apply(depth, opt[depth], p, rv, rinf, used, distinct, -1)
                size -= 1
            continue
        nodes += 1
        if nodes > budget:
            complete = False
            break
        opt[depth] = o
        if o < p:
            _apply(depth, o, p, rv, rinf, used, distinct, 1)
            size += 1
        if use_bound:
            bound = size + _admissible_remaining(depth + 1, p, rv, rinf, used, distinct, cap)
            if bound <= best:
                if o < p:
                    _apply(depth, o, p, rv, rinf, used, distinct, -1)
                    size -= 1
                continue
        depth += 1
    return best, best_opts, nodes, complete


def dfs_search(p, rv, rinf, cap, fixed, must, use_bound, budget):
    rv = np.ascontiguousarray(rv, dtype=np.int64)
    rinf = np.ascontiguousarray(rinf, dtype=np.bool_)
    fixed = np.ascontiguousarray(fixed, dtype=np.int64)
    must = np.ascontiguousarray(must, dtype=np.bool_)
    best, opts, nodes, complete = _dfs_loop(p, rv, rinf, cap, fixed, must, use_bound, budget)
    return int(best), np.asarray(opts), int(nodes), bool(complete)


# ---------------------------------------------------------------------------
# two-ends ball counts
# ---------------------------------------------------------------------------


@jit
def _ball_counts_loop(pts, radii2):
    m = pts.shape[0]
    R = radii2.shape[0]
    out = np.zeros((R, m), dtype=np.int64)
    for i in range(m):
        for j in range(m):
            d2 = 0
            for t in range(pts.shape[1]):
                diff = pts[i, t] - pts[j, t]
                d2 += diff * diff
            for q in range(R):
                if d2 <= radii2[q]:
                    out[q, i] += 1
    return out


def _ball_counts_np(pts, radii2):
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return (d2[None, :, :] <= radii2[:, None, None]).sum(axis=2).astype(np.int64)


def ball_counts(pts, radii2, *, force_numpy=False):
    """``out[q, i] = #{j : |pts_j - pts_i|^2 <= radii2[q]}`` (integer grid units)."""
    pts = np.ascontiguousarray(pts, dtype=np.int64)
    radii2 = np.ascontiguousarray(radii2, dtype=np.int64)
    if pts.shape[0] == 0:
        return np.zeros((radii2.shape[0], 0), dtype=np.int64)
    if USE_NUMBA and not force_numpy:
        return _ball_counts_loop(pts, radii2)
    return _ball_counts_np(pts, radii2)


# ---------------------------------------------------------------------------
# six-slices quadruple counts: Q[i, j] = #{(k, l) : t_i..t_l pairwise separated,
# t_k, t_l in the slope window of (t_i, t_j)}
# ---------------------------------------------------------------------------


def _sep_matrix(h, lo, hi):
    d = np.abs(h[:, None] - h[None, :])
    return (d >= lo) & (d <= hi)


def _window_np(h, i, W):
    # window[j, k]: 1/W <= |h_k - h_i| / |h_j - h_k| <= W
    num = np.abs(h[None, :] - h[i])
    den = np.abs(h[:, None] - h[None, :])
    return (W * num >= den) & (num <= W * den) & (den > 0)


def _quad_counts_np(h, lo, hi, W):
    n = h.shape[0]
    A = _sep_matrix(h, lo, hi)
    Af = A.astype(np.float64)
    Q = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        Wm = A[i][None, :] & A & _window_np(h, i, W)
        Wm &= A[i][:, None]
        Wf = Wm.astype(np.float64)
        Q[i] = np.rint(((Wf @ Af) * Wf).sum(axis=1)).astype(np.int64)
    return Q


@jit
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@jit
def _quad_counts_loop(h, lo, hi, W):
    n = h.shape[0]
    nw = (n + 63) // 64
    A = np.zeros((n, nw), dtype=np.uint64)
    for a in range(n):
        for b in range(n):
            d = abs(h[a] - h[b])
            if d >= lo and d <= hi:
                A[a, b // 64] |= np.uint64(1) << np.uint64(b % 64)
    Q = np.zeros((n, n), dtype=np.int64)
    w = np.zeros(nw, dtype=np.uint64)
    for i in range(n):
        for j in range(n):
            d = abs(h[i] - h[j])
            if d < lo or d > hi:
                continue
            for q in range(nw):
                w[q] = A[i, q] & A[j, q]
            for k in range(n):
                if (w[k // 64] >> np.uint64(k % 64)) & np.uint64(1):
                    num = abs(h[k] - h[i])
                    den = abs(h[j] - h[k])
                    if not (W * num >= den and num <= W * den and den > 0):
                        w[k // 64] &= ~(np.uint64(1) << np.uint64(k % 64))
            total = 0
            for k in range(n):
                if (w[k // 64] >> np.uint64(k % 64)) & np.uint64(1):
                    for q in range(nw):
                        total += np.int64(_popcount64(A[k, q] & w[q]))
            Q[i, j] = total
    return Q




def quad_counts(heights, lo, hi, W=4, *, force_numpy=False):
    """Six-slices ``#Q_{t_i, t_j}`` for every ordered pair of one line's heights.

    ``heights`` are integer grid heights; two heights are separated when
    their distance lies in ``[lo, hi]``; ``W`` is the slope window factor.
    """
    h = np.ascontiguousarray(heights, dtype=np.int64)
    if h.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if USE_NUMBA and not force_numpy:
        return _quad_counts_loop(h, int(lo), int(hi), int(W))
    return _quad_counts_np(h, int(lo), int(hi), int(W))
