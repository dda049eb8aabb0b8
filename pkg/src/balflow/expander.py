"""Conductance certification and static expander decomposition.

Works on unweighted undirected multigraphs with tagged self-loops.  Loops
contribute 2 to their vertex's degree (so they pad volume) but can never
cross a cut, so they never appear in a partition boundary.

The decomposition is rebuilt from scratch on demand: certify a component as
an expander, or split it along a low-conductance cut and recurse.  Small
components are certified by exhaustive enumeration; larger ones by the
spectral bound conductance >= lambda_2 / 2 from the normalized Laplacian,
computed with a dense symmetric eigensolver so the certificate is never
optimistic (an unconverged iterative estimate can only overestimate
lambda_2, which would certify falsely).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fast
from .errors import InputError

EXACT_ENUMERATION_LIMIT = 16
EIGEN_SAFETY_MARGIN = 1e-9


@dataclass
class LoopedGraph:
    """Undirected multigraph: edge list plus per-vertex self-loop counts."""

    n: int
    edges: np.ndarray  # shape (E, 2), endpoints, u != v
    loops: np.ndarray  # shape (n,), loop count per vertex

    @classmethod
    def from_edges(cls, n: int, edges, loops=None) -> "LoopedGraph":
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InputError("edge endpoint out of range")
        loop_counts = np.zeros(n, dtype=np.int64)
        if arr.size:
            loop_mask = arr[:, 0] == arr[:, 1]
            if loop_mask.any():
                np.add.at(loop_counts, arr[loop_mask, 0], 1)
                arr = arr[~loop_mask]
        if loops is not None:
            loop_counts += np.asarray(loops, dtype=np.int64)
        return cls(n=n, edges=arr, loops=loop_counts)

    def degrees(self) -> np.ndarray:
        deg = 2 * self.loops.astype(np.int64)
        if self.edges.size:
            deg = deg + np.bincount(self.edges.ravel(), minlength=self.n)
        return deg

    def edge_count(self) -> int:
        return int(self.edges.shape[0] + self.loops.sum())


def add_self_loops(g: LoopedGraph, per_vertex: int) -> LoopedGraph:
    """Attach ``per_vertex`` tagged self-loops to every vertex."""
    if per_vertex < 0:
        raise InputError("per_vertex must be nonnegative")
    return LoopedGraph(n=g.n, edges=g.edges, loops=g.loops + per_vertex)


def volume(g: LoopedGraph, members) -> int:
    """Sum of degrees over ``members``; a self-loop contributes 2."""
    idx = np.asarray(list(members), dtype=np.int64)
    return int(g.degrees()[idx].sum())


def conductance(g: LoopedGraph, members) -> float:
    """|boundary(S)| / min(vol(S), vol(complement)) on the full graph."""
    mask = np.zeros(g.n, dtype=bool)
    mask[np.asarray(list(members), dtype=np.int64)] = True
    deg = g.degrees()
    vol_s = int(deg[mask].sum())
    vol_c = int(deg[~mask].sum())
    if vol_s == 0 or vol_c == 0:
        raise InputError("both cut sides need positive volume")
    cut = int((mask[g.edges[:, 0]] != mask[g.edges[:, 1]]).sum()) if g.edges.size else 0
    return cut / min(vol_s, vol_c)


@dataclass
class Partition:
    """Expander decomposition: clusters, crossing edges, and realized slack."""

    clusters: list[np.ndarray]
    boundary: np.ndarray  # indices into the decomposed graph's edge list
    phi: float
    slack: float
    certified: list[float] = field(default_factory=list)  # per-cluster lower bounds

    def cluster_of(self, n: int) -> np.ndarray:
        label = np.full(n, -1, dtype=np.int64)
        for k, cl in enumerate(self.clusters):
            label[cl] = k
        return label


# -- certification -------------------------------------------------------------


def _exact_enum_numpy(deg: np.ndarray, eu: np.ndarray, ev: np.ndarray):
    """Vectorised exhaustive minimum conductance (independent of the kernel)."""
    k = deg.shape[0]
    masks = np.arange(1, (1 << k) - 1, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(k)) & 1).astype(bool)
    vol_s = bits @ deg.astype(np.float64)
    vol_all = float(deg.sum())
    mn = np.minimum(vol_s, vol_all - vol_s)
    cut = np.zeros(len(masks), dtype=np.float64)
    for u, v in zip(eu, ev):
        cut += bits[:, u] != bits[:, v]
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(mn > 0, cut / mn, np.inf)
    k_best = int(np.argmin(cond))
    return float(cond[k_best]), int(masks[k_best])


def _normalized_second_eigenpair(deg: np.ndarray, eu, ev, loops):
    """Exact second-smallest eigenpair of the normalized Laplacian (dense)."""
    k = deg.shape[0]
    adj = np.zeros((k, k), dtype=np.float64)
    np.add.at(adj, (eu, ev), 1.0)
    np.add.at(adj, (ev, eu), 1.0)
    adj[np.arange(k), np.arange(k)] += 2.0 * loops
    d_isqrt = 1.0 / np.sqrt(deg.astype(np.float64))
    lap = np.eye(k) - (adj * d_isqrt).T * d_isqrt
    vals, vecs = np.linalg.eigh(lap)
    return float(vals[1]), vecs[:, 1] * d_isqrt  # eigenvector mapped back


def _sweep_cut(deg: np.ndarray, eu, ev, order: np.ndarray):
    """Best prefix cut along ``order``; returns (conductance, local members)."""
    k = deg.shape[0]
    adj: list[list[int]] = [[] for _ in range(k)]
    for u, v in zip(eu, ev):
        adj[int(u)].append(int(v))
        adj[int(v)].append(int(u))
    in_set = np.zeros(k, dtype=bool)
    vol_all = float(deg.sum())
    vol_s = 0.0
    cut = 0.0
    best = np.inf
    best_prefix = 1
    for i in range(k - 1):
        v = int(order[i])
        inside = sum(1 for w in adj[v] if in_set[w])
        cut += len(adj[v]) - 2 * inside
        in_set[v] = True
        vol_s += float(deg[v])
        mn = min(vol_s, vol_all - vol_s)
        if mn > 0:
            cond = cut / mn
            if cond < best:
                best = cond
                best_prefix = i + 1
    return best, order[:best_prefix]


def _certify_local(loops, eu, ev, k, phi_target):
    """Certification core on a connected component in local numbering.

    Returns ``(bound, None)`` when certified, else ``(None, local_members)``
    with a cut of conductance below ``phi_target``.
    """
    deg = 2 * loops.astype(np.int64)
    if eu.size:
        deg = deg + np.bincount(np.concatenate([eu, ev]), minlength=k)
    if (deg == 0).any():
        raise InputError("component has a zero-volume vertex")
    if k <= EXACT_ENUMERATION_LIMIT:
        if _fast.HAVE_NUMBA:
            best, mask = _fast.exact_min_conductance(deg.astype(np.float64), eu, ev)
            best, mask = float(best), int(mask)
        else:  # pragma: no cover - numba is a declared dependency
            best, mask = _exact_enum_numpy(deg, eu, ev)
        if best >= phi_target:
            return best, None
        return None, np.asarray([i for i in range(k) if (mask >> i) & 1], dtype=np.int64)
    lam2, vec = _normalized_second_eigenpair(deg, eu, ev, loops)
    bound = max(lam2 / 2.0 - EIGEN_SAFETY_MARGIN, 0.0)
    if bound >= phi_target:
        return bound, None
    order = np.argsort(vec, kind="stable")
    _, prefix = _sweep_cut(deg, eu, ev, order)
    return None, np.asarray(sorted(int(v) for v in prefix), dtype=np.int64)


def certify_expander(
    g: LoopedGraph, phi_target: float, vertices: np.ndarray | None = None
):
    """Certify a connected component of ``g`` as a phi_target-expander.

    Returns ``(bound, None)`` with a sound lower bound on the component's
    conductance when it reaches ``phi_target``, else ``(None, cut)`` where
    ``cut`` is a violating vertex subset in global numbering.  Singletons are
    expanders vacuously (infinite bound).
    """
    comp = np.arange(g.n, dtype=np.int64) if vertices is None else np.asarray(vertices)
    if comp.size == 1:
        return np.inf, None
    local = np.full(g.n, -1, dtype=np.int64)
    local[comp] = np.arange(comp.size)
    if g.edges.size:
        sel = (local[g.edges[:, 0]] >= 0) & (local[g.edges[:, 1]] >= 0)
        eu = local[g.edges[sel, 0]]
        ev = local[g.edges[sel, 1]]
    else:
        eu = np.empty(0, dtype=np.int64)
        ev = np.empty(0, dtype=np.int64)
    bound, cut = _certify_local(g.loops[comp], eu, ev, comp.size, phi_target)
    if bound is not None:
        return bound, None
    return None, comp[cut]


# -- decomposition --------------------------------------------------------------


def decompose(g: LoopedGraph, phi: float) -> Partition:
    """Partition into certified (phi/slack)-expander clusters.

    Recursively splits components along violating cuts until every cluster
    certifies.  The reported slack is phi over the weakest certified bound
    (at least 1).
    """
    if not (0.0 < phi < 1.0):
        raise InputError("phi must lie in (0, 1)")
    clusters: list[np.ndarray] = []
    certified: list[float] = []

    # worklist of (global vertex ids, local edge endpoints)
    work: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for comp, eu, ev in _initial_components(g):
        work.append((comp, eu, ev))
    while work:
        comp, eu, ev = work.pop()
        k = comp.size
        if k == 1:
            clusters.append(comp)
            certified.append(np.inf)
            continue
        bound, cut = _certify_local(g.loops[comp], eu, ev, k, phi)
        if bound is not None:
            clusters.append(np.sort(comp))
            certified.append(bound)
            continue
        side = np.zeros(k, dtype=bool)
        side[cut] = True
        for part in (cut, np.flatnonzero(~side)):
            inside = bool(side[part[0]])
            keep = (side[eu] == inside) & (side[ev] == inside)
            remap = np.full(k, -1, dtype=np.int64)
            remap[part] = np.arange(part.size)
            sub_eu = remap[eu[keep]]
            sub_ev = remap[ev[keep]]
            # a side may be internally disconnected: queue its components
            for piece, peu, pev in _split_connected(part.size, sub_eu, sub_ev):
                work.append((comp[part[piece]], peu, pev))

    label = np.full(g.n, -1, dtype=np.int64)
    for idx, cl in enumerate(clusters):
        label[cl] = idx
    if g.edges.size:
        boundary = np.flatnonzero(label[g.edges[:, 0]] != label[g.edges[:, 1]])
    else:
        boundary = np.empty(0, dtype=np.int64)
    finite = [b for b in certified if np.isfinite(b)]
    slack = max(1.0, phi / min(finite)) if finite else 1.0
    return Partition(
        clusters=clusters,
        boundary=boundary,
        phi=phi,
        slack=slack,
        certified=certified,
    )


def _initial_components(g: LoopedGraph):
    """Connected components with induced local edge lists."""
    for piece, eu, ev in _split_connected(
        g.n,
        g.edges[:, 0] if g.edges.size else np.empty(0, dtype=np.int64),
        g.edges[:, 1] if g.edges.size else np.empty(0, dtype=np.int64),
    ):
        yield piece, eu, ev


def _split_connected(k: int, eu: np.ndarray, ev: np.ndarray):
    """Split vertex range [0, k) into connected pieces of the given edges.

    Yields (vertex ids, local eu, local ev) per piece, vertices sorted and
    edges renumbered to the piece.
    """
    parent = np.arange(k, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = int(parent[root])
        while parent[x] != root:
            parent[x], x = root, int(parent[x])
        return root

    for u, v in zip(eu, ev):
        parent[find(int(u))] = find(int(v))
    roots = np.fromiter((find(v) for v in range(k)), dtype=np.int64, count=k)
    edge_root = roots[eu] if eu.size else np.empty(0, dtype=np.int64)
    for r in np.unique(roots):
        piece = np.flatnonzero(roots == r)
        if piece.size == 1:
            yield piece, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
            continue
        remap = np.full(k, -1, dtype=np.int64)
        remap[piece] = np.arange(piece.size)
        sel = edge_root == r
        yield piece, remap[eu[sel]], remap[ev[sel]]