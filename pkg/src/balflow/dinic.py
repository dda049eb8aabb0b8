"""Blocking-flow maximum flow.

Two faces: unit-capacity blocking-flow rounds on the solver's multigraph
(the baseline algorithm and the hybrid pipeline's opening phase), and an
exact real-capacity max-flow/min-cut solver used as the inner routine of the
fractional-programming cut oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _fast
from .errors import InputError, InvariantViolation
from .graph import TSLINK, DirectedMultigraph, extract_flow_paths, flip_path
from .results import FlowResult, RunStats

CAPACITY_CLAMP = 1e-12


def residual_distance(g: DirectedMultigraph) -> int | None:
    """BFS distance from s to t, (t, s) links excluded; None if unreachable."""
    indptr, arc_ids = g._out_csr()
    eff_heads = np.where(g._flipped[arc_ids], g._tails[arc_ids], g._heads[arc_ids])
    tags = g._tags
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[g.s] = 0
    queue = [g.s]
    while queue:
        nxt = []
        for u in queue:
            for k in range(indptr[u], indptr[u + 1]):
                if tags[arc_ids[k]] == TSLINK:
                    continue
                v = int(eff_heads[k])
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    if v == g.t:
                        return int(dist[v])
                    nxt.append(v)
        queue = nxt
    return None


def blocking_flow_round(g: DirectedMultigraph) -> int:
    """One Dinic phase: saturate the BFS level graph, flip all found paths.

    Works on unit capacities (every live arc carries one unit).  Returns the
    number of augmenting paths found; 0 means t is unreachable and the flow
    is maximum.  The s-t residual distance strictly increases across phases.
    """
    n = g.n
    indptr, arc_ids = g._out_csr()
    eff_heads = np.where(g._flipped[arc_ids], g._tails[arc_ids], g._heads[arc_ids])
    tags = g._tags
    level = np.full(n, -1, dtype=np.int64)
    level[g.s] = 0
    queue = [g.s]
    while queue:
        nxt = []
        for u in queue:
            for k in range(indptr[u], indptr[u + 1]):
                if tags[arc_ids[k]] == TSLINK:
                    continue
                v = int(eff_heads[k])
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        queue = nxt
    if level[g.t] < 0:
        return 0

    used = np.zeros(g.num_arc_slots, dtype=bool)
    it = indptr[:-1].copy()
    paths: list[list[int]] = []
    path_arcs: list[int] = []
    path_verts = [g.s]
    u = g.s
    while True:
        if u == g.t:
            paths.append(path_arcs.copy())
            for arc in path_arcs:
                used[arc] = True
            path_arcs.clear()
            path_verts = [g.s]
            u = g.s
            continue
        advanced = False
        while it[u] < indptr[u + 1]:
            k = it[u]
            arc = int(arc_ids[k])
            v = int(eff_heads[k])
            if not used[arc] and tags[arc] != TSLINK and level[v] == level[u] + 1:
                path_arcs.append(arc)
                path_verts.append(v)
                u = v
                advanced = True
                break
            it[u] += 1
        if advanced:
            continue
        if u == g.s:
            break
        level[u] = -1
        path_arcs.pop()
        path_verts.pop()
        u = path_verts[-1]
        it[u] += 1

    for path in paths:
        flip_path(g, path)
    return len(paths)


def dinic_maxflow(g: DirectedMultigraph, max_rounds: int | None = None) -> FlowResult:
    """Run blocking-flow rounds until t is unreachable or the budget runs out."""
    stats = RunStats()
    start_value = g.flow_value
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        found = blocking_flow_round(g)
        if found == 0:
            break
        rounds += 1
        stats.augmentations += found
    stats.blocking_rounds = rounds
    value = g.flow_value - start_value
    stats.blocking_flow_value = value
    # the decomposition covers all flow in the graph, so only report paths
    # when this call produced all of it
    paths = extract_flow_paths(g) if max_rounds is None and start_value == 0 else []
    if paths and len(paths) != g.flow_value:
        raise InvariantViolation(
            f"decomposed {len(paths)} paths but counted {g.flow_value} augmentations"
        )
    if paths:
        labels = g.vertex_labels
        paths = [[int(labels[v]) for v in p] for p in paths]
    return FlowResult(value=value, paths=paths, stats=stats)


# -- real capacities ---------------------------------------------------------


@dataclass
class CapacitatedNetwork:
    """Flow network with nonnegative real capacities."""

    n: int
    tails: list[int] = field(default_factory=list)
    heads: list[int] = field(default_factory=list)
    capacities: list[float] = field(default_factory=list)
    flows: list[float] = field(default_factory=list)

    def add_arc(self, tail: int, head: int, capacity: float) -> int:
        if not (0 <= tail < self.n and 0 <= head < self.n):
            raise InputError("arc endpoint out of range")
        if not (math.isfinite(capacity) and capacity >= 0.0):
            raise InputError("capacity must be finite and nonnegative")
        if capacity < CAPACITY_CLAMP:
            capacity = 0.0
        self.tails.append(tail)
        self.heads.append(head)
        self.capacities.append(float(capacity))
        self.flows.append(0.0)
        return len(self.tails) - 1


def _maxflow_python(nn, src, snk, indptr, eids, eto, ecap):
    """Pure-Python mirror of the compiled kernel (fallback and cross-check)."""
    level = np.empty(nn, dtype=np.int64)
    it = np.empty(nn, dtype=np.int64)
    total = 0.0
    eps = _fast.RESIDUAL_EPS
    while True:
        level[:] = -1
        level[src] = 0
        queue = [src]
        while queue:
            nxt = []
            for u in queue:
                for k in range(indptr[u], indptr[u + 1]):
                    e = int(eids[k])
                    if ecap[e] > eps:
                        v = int(eto[e])
                        if level[v] < 0:
                            level[v] = level[u] + 1
                            nxt.append(v)
            queue = nxt
        if level[snk] < 0:
            break
        it[:] = indptr[:-1]
        while True:
            path_e: list[int] = []
            path_v = [src]
            u = src
            reached = False
            while True:
                if u == snk:
                    reached = True
                    break
                advanced = False
                while it[u] < indptr[u + 1]:
                    e = int(eids[it[u]])
                    v = int(eto[e])
                    if ecap[e] > eps and level[v] == level[u] + 1:
                        path_e.append(e)
                        path_v.append(v)
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if advanced:
                    continue
                if u == src:
                    break
                level[u] = -1
                path_e.pop()
                path_v.pop()
                u = path_v[-1]
                it[u] += 1
            if not reached:
                break
            f = min(ecap[e] for e in path_e)
            for e in path_e:
                ecap[e] -= f
                ecap[e ^ 1] += f
            total += f
    reach = np.zeros(nn, dtype=np.uint8)
    reach[src] = 1
    queue = [src]
    while queue:
        u = queue.pop()
        for k in range(indptr[u], indptr[u + 1]):
            e = int(eids[k])
            if ecap[e] > eps and reach[int(eto[e])] == 0:
                reach[int(eto[e])] = 1
                queue.append(int(eto[e]))
    return total, reach


def capacitated_maxflow(
    net: CapacitatedNetwork, src: int, snk: int
) -> tuple[float, np.ndarray]:
    """Exact max flow on real capacities; returns (value, min-cut source side).

    The min cut is the set of vertices reachable from ``src`` in the final
    residual network.  Max-flow/min-cut equality is verified to 1e-9 relative
    tolerance; a failure signals numeric breakdown.
    """
    if src == snk:
        raise InputError("source and sink coincide")
    m = len(net.tails)
    etails = np.empty(2 * m, dtype=np.int64)
    eto = np.empty(2 * m, dtype=np.int64)
    ecap = np.empty(2 * m, dtype=np.float64)
    for i in range(m):
        etails[2 * i] = net.tails[i]
        eto[2 * i] = net.heads[i]
        ecap[2 * i] = net.capacities[i]
        etails[2 * i + 1] = net.heads[i]
        eto[2 * i + 1] = net.tails[i]
        ecap[2 * i + 1] = 0.0
    indptr, eids = _fast.build_csr(net.n, etails)
    if _fast.HAVE_NUMBA:
        value, reach = _fast.maxflow_with_cut(net.n, src, snk, indptr, eids, eto, ecap)
        value = float(value)
    else:  # pragma: no cover - numba is a declared dependency
        value, reach = _maxflow_python(net.n, src, snk, indptr, eids, eto, ecap)
    for i in range(m):
        net.flows[i] = net.capacities[i] - float(ecap[2 * i])
    side = np.flatnonzero(reach[: net.n].astype(bool))
    cut_capacity = sum(
        net.capacities[i]
        for i in range(m)
        if reach[net.tails[i]] and not reach[net.heads[i]]
    )
    scale = max(1.0, abs(value), cut_capacity)
    if abs(cut_capacity - value) > 1e-9 * scale:
        raise InvariantViolation(
            f"max-flow {value} and min-cut {cut_capacity} disagree beyond tolerance"
        )
    return value, side
