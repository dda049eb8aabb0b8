"""Compiled kernels for the solver's hot paths.

Everything here operates on flat numpy arrays; the object-level modules own
the data and hand views to these kernels.  Each kernel has the same
observable semantics as the pure-Python route it accelerates, which the test
suite checks by running both on identical inputs.

Edge storage convention for the flow kernels: edges come in consecutive
(forward, reverse) pairs so that ``e ^ 1`` is the residual partner of ``e``.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


RESIDUAL_EPS = 1e-12

# status codes shared with the Python wrappers
BALANCED = 0
BUFFER_FULL = 1
GUARD_TRIPPED = 2
ORACLE_STUCK = 3


def build_csr(num_nodes: int, edge_tails: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group edge ids by tail node: returns (indptr, edge_ids)."""
    order = np.argsort(edge_tails, kind="stable").astype(np.int64)
    counts = np.bincount(edge_tails, minlength=num_nodes)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order


@njit(cache=True)
def _maxflow(nn, src, snk, indptr, eids, eto, ecap, level, it, q, path_v, path_e):
    """Blocking-flow max flow (current-arc DFS); ``ecap`` becomes the residual."""
    total = 0.0
    while True:
        for i in range(nn):
            level[i] = -1
        level[src] = 0
        q[0] = src
        qh, qt = 0, 1
        while qh < qt:
            u = q[qh]
            qh += 1
            for k in range(indptr[u], indptr[u + 1]):
                e = eids[k]
                if ecap[e] > RESIDUAL_EPS:
                    v = eto[e]
                    if level[v] < 0:
                        level[v] = level[u] + 1
                        q[qt] = v
                        qt += 1
        if level[snk] < 0:
            return total
        for i in range(nn):
            it[i] = indptr[i]
        while True:
            depth = 0
            path_v[0] = src
            u = src
            reached = False
            while True:
                if u == snk:
                    reached = True
                    break
                advanced = False
                while it[u] < indptr[u + 1]:
                    e = eids[it[u]]
                    v = eto[e]
                    if ecap[e] > RESIDUAL_EPS and level[v] == level[u] + 1:
                        path_e[depth] = e
                        depth += 1
                        path_v[depth] = v
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if advanced:
                    continue
                if u == src:
                    break
                level[u] = -1
                depth -= 1
                u = path_v[depth]
                it[u] += 1
            if not reached:
                break
            f = 1e300
            for i in range(depth):
                e = path_e[i]
                if ecap[e] < f:
                    f = ecap[e]
            for i in range(depth):
                e = path_e[i]
                ecap[e] -= f
                ecap[e ^ 1] += f
            total += f


@njit(cache=True)
def _residual_reach(nn, src, indptr, eids, eto, ecap, mark, q):
    """Mark nodes reachable from ``src`` through positive residual capacity."""
    for i in range(nn):
        mark[i] = 0
    mark[src] = 1
    q[0] = src
    qh, qt = 0, 1
    while qh < qt:
        u = q[qh]
        qh += 1
        for k in range(indptr[u], indptr[u + 1]):
            e = eids[k]
            if ecap[e] > RESIDUAL_EPS:
                v = eto[e]
                if mark[v] == 0:
                    mark[v] = 1
                    q[qt] = v
                    qt += 1


@njit(cache=True)
def maxflow_with_cut(nn, src, snk, indptr, eids, eto, ecap):
    """One-shot max flow plus the source side of a minimum cut."""
    level = np.empty(nn, dtype=np.int64)
    it = np.empty(nn, dtype=np.int64)
    q = np.empty(nn, dtype=np.int64)
    path_v = np.empty(nn + 1, dtype=np.int64)
    path_e = np.empty(nn + 1, dtype=np.int64)
    value = _maxflow(nn, src, snk, indptr, eids, eto, ecap, level, it, q, path_v, path_e)
    mark = np.zeros(nn, dtype=np.uint8)
    _residual_reach(nn, src, indptr, eids, eto, ecap, mark, q)
    return value, mark


@njit(cache=True)
def exact_min_conductance(deg, eu, ev):
    """Exhaustive minimum conductance of a connected component (<= 62 bits).

    ``deg`` are degrees (self-loops already counted twice), ``eu``/``ev`` the
    non-loop edge endpoints in local vertex numbering.  Returns the minimum
    conductance and one achieving cut as a bitmask.
    """
    k = deg.shape[0]
    ne = eu.shape[0]
    vol_all = 0.0
    for v in range(k):
        vol_all += deg[v]
    best = 1e300
    best_mask = np.int64(1)
    for mask in range(1, (1 << k) - 1):
        vol_s = 0.0
        for v in range(k):
            if (mask >> v) & 1:
                vol_s += deg[v]
        vol_c = vol_all - vol_s
        mn = vol_s if vol_s < vol_c else vol_c
        if mn <= 0.0:
            continue
        cut = 0.0
        for e in range(ne):
            if ((mask >> eu[e]) & 1) != ((mask >> ev[e]) & 1):
                cut += 1.0
        cond = cut / mn
        if cond < best:
            best = cond
            best_mask = np.int64(mask)
    return best, best_mask


@njit(cache=True)
def _cut_weight(mask, pair_u, pair_v, pair_w):
    total = 0.0
    for p in range(pair_w.shape[0]):
        if mask[pair_u[p]] != mask[pair_v[p]]:
            total += pair_w[p]
    return total


@njit(cache=True)
def _dinkelbach_query(
    n,
    grad,
    pair_u,
    pair_v,
    pair_w,
    indptr,
    eids,
    eto,
    ecap,
    level,
    it,
    q,
    path_v,
    path_e,
    mark,
    cut_mask,
    warm_valid,
    tol_rel,
    max_iter,
):
    """Exact minimum ratio cut via parametric min-cut iterations.

    ``cut_mask`` carries a warm-start cut in and the optimal cut out.
    Returns (status, ratio, g_val, u_val, iters) with status 0 = optimal,
    1 = trivial (no usefully negative gradient), 2 = iteration budget hit.
    """
    N = n + 2
    sigma = n
    tau = n + 1
    P = pair_w.shape[0]

    vmin = 0
    gmin = grad[0]
    for v in range(1, n):
        if grad[v] < gmin:
            gmin = grad[v]
            vmin = v
    if gmin >= -1e-12:
        for v in range(n):
            cut_mask[v] = 0
        cut_mask[vmin] = 1
        uval = _cut_weight(cut_mask, pair_u, pair_v, pair_w)
        gval = gmin if gmin < 0.0 else 0.0
        return 1, 0.0, gval, uval, 0

    pneg = 0.0
    for v in range(n):
        if grad[v] < 0.0:
            pneg -= grad[v]
    tol = tol_rel * max(1.0, pneg)

    # starting point must be an achieved (cut, ratio) pair
    g_cur = 0.0
    u_cur = 0.0
    ok = False
    if warm_valid == 1:
        size = 0
        for v in range(n):
            if cut_mask[v] == 1:
                size += 1
        if 0 < size < n:
            for v in range(n):
                if cut_mask[v] == 1:
                    g_cur += grad[v]
            u_cur = _cut_weight(cut_mask, pair_u, pair_v, pair_w)
            ok = g_cur < 0.0 and u_cur > 0.0
    if not ok:
        for v in range(n):
            cut_mask[v] = 0
        cut_mask[vmin] = 1
        g_cur = grad[vmin]
        u_cur = _cut_weight(cut_mask, pair_u, pair_v, pair_w)
    if u_cur <= 0.0:  # disconnected input; callers guarantee otherwise
        return 2, 0.0, g_cur, u_cur, 0

    lam = -g_cur / u_cur
    status = 2
    iters = 0
    base = 4 * n
    while iters < max_iter:
        iters += 1
        for v in range(n):
            gv = grad[v]
            e = 4 * v
            ecap[e] = -gv if gv < 0.0 else 0.0
            ecap[e + 1] = 0.0
            ecap[e + 2] = gv if gv > 0.0 else 0.0
            ecap[e + 3] = 0.0
        for p in range(P):
            c = lam * pair_w[p]
            ecap[base + 2 * p] = c
            ecap[base + 2 * p + 1] = c
        flow = _maxflow(
            N, sigma, tau, indptr, eids, eto, ecap, level, it, q, path_v, path_e
        )
        if flow >= pneg - tol:
            status = 0
            break
        _residual_reach(N, sigma, indptr, eids, eto, ecap, mark, q)
        g_new = 0.0
        size = 0
        for v in range(n):
            if mark[v] == 1:
                g_new += grad[v]
                size += 1
        if size == 0 or size == n:
            status = 0
            break
        u_new = 0.0
        for p in range(P):
            if mark[pair_u[p]] != mark[pair_v[p]]:
                u_new += pair_w[p]
        if u_new <= 0.0:
            status = 0
            break
        ratio_new = g_new / u_new
        if ratio_new >= -lam - 1e-15:
            status = 0
            break
        for v in range(n):
            cut_mask[v] = mark[v]
        g_cur = g_new
        u_cur = u_new
        lam = -ratio_new
    return status, -lam, g_cur, u_cur, iters


@njit(cache=True)
def _balance_fused(
    n,
    y,
    grad,
    a_id,
    a_tail,
    a_head,
    a_pair,
    w_tilde,
    gap_ref,
    pair_u,
    pair_v,
    pair_w,
    indptr,
    eids,
    eto,
    ecap,
    level,
    it,
    q,
    path_v,
    path_e,
    mark,
    cut_mask,
    state_io,
    eps,
    alpha,
    tol_rel,
    ref_ids,
    ref_w,
    tog_delta,
    tog_eta,
    tog_usize,
    out_f,
):
    """Toggle loop fused with the exact oracle, drift scan and refreshes.

    ``state_io``: [warm_valid, refresh_total, toggles_done, max_toggles].
    Buffers collect refresh events (for the sparsifier) and per-toggle energy
    deltas (for the ledger).  Returns (status, toggles_this_call, n_refresh).
    """
    L = a_id.shape[0]
    P = pair_w.shape[0]
    threshold = -1.0 / (3.0 * alpha)
    warm = state_io[0]
    refresh_total = state_io[1]
    toggles = state_io[2]
    max_toggles = state_io[3]
    ref_n = 0
    tog_n = 0
    ref_cap = ref_ids.shape[0]
    tog_cap = tog_delta.shape[0]
    status = BALANCED
    while True:
        st, ratio, g_val, u_val, _ = _dinkelbach_query(
            n, grad, pair_u, pair_v, pair_w, indptr, eids, eto, ecap,
            level, it, q, path_v, path_e, mark, cut_mask, warm, tol_rel,
            10 * (n + 2),
        )
        if st == 2:
            status = ORACLE_STUCK
            break
        warm = 1
        out_f[1] = ratio
        if ratio > threshold:
            status = BALANCED
            break
        if toggles >= max_toggles:
            status = GUARD_TRIPPED
            break
        if ref_n + L > ref_cap or tog_n >= tog_cap:
            status = BUFFER_FULL
            break
        eta = 1.0 / (16.0 * alpha * u_val)
        delta = 0.0
        for i in range(L):
            cu = cut_mask[a_tail[i]]
            cv = cut_mask[a_head[i]]
            if cu == cv:
                continue
            gap = y[a_head[i]] - y[a_tail[i]]
            gap2 = gap - eta if cu == 1 else gap + eta
            e1 = -math.log(gap + 1.0) if gap >= 0.0 else -gap
            e2 = -math.log(gap2 + 1.0) if gap2 >= 0.0 else -gap2
            delta += e2 - e1
        for v in range(n):
            if cut_mask[v] == 1:
                y[v] += eta
        toggles += 1
        tog_delta[tog_n] = delta
        tog_eta[tog_n] = eta
        tog_usize[tog_n] = u_val
        tog_n += 1
        out_f[0] += delta
        # only arcs crossing the toggled cut can have drifted
        for i in range(L):
            cu = cut_mask[a_tail[i]]
            cv = cut_mask[a_head[i]]
            if cu == cv:
                continue
            arc = a_id[i]
            gap = y[a_head[i]] - y[a_tail[i]]
            if w_tilde[arc] * abs(gap - gap_ref[arc]) >= eps:
                w_new = 1.0 / ((gap if gap > 0.0 else 0.0) + 1.0)
                dw = w_new - w_tilde[arc]
                grad[a_tail[i]] += dw
                grad[a_head[i]] -= dw
                pr = a_pair[i]
                if pr >= 0:
                    pair_w[pr] += dw
                w_tilde[arc] = w_new
                gap_ref[arc] = gap
                ref_ids[ref_n] = arc
                ref_w[ref_n] = w_new
                ref_n += 1
                refresh_total += 1
                if refresh_total % 16384 == 0:
                    for v in range(n):
                        grad[v] = 0.0
                    for p in range(P):
                        pair_w[p] = 0.0
                    for j in range(L):
                        wj = w_tilde[a_id[j]]
                        grad[a_tail[j]] += wj
                        grad[a_head[j]] -= wj
                        pj = a_pair[j]
                        if pj >= 0:
                            pair_w[pj] += wj
    state_io[0] = warm
    state_io[1] = refresh_total
    state_io[2] = toggles
    return status, toggles, ref_n
