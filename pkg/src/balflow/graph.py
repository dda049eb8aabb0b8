"""Directed multigraph with in-place arc flipping.

The residual graph is never materialised separately: augmenting along a path
flips the orientation bit of every arc on it, so the graph object *is* the
residual graph at all times.  Arc identifiers are stable (append-only storage
with tombstones) because the potential bookkeeping and the sparsifier key
their state by arc id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, InvariantViolation

ORIGINAL = 0
TSLINK = 1

_INITIAL_CAPACITY = 16


@dataclass(frozen=True)
class Arc:
    """Read-only snapshot of one arc; mutate through the owning graph."""

    id: int
    tail: int
    head: int
    tag: int
    flipped: bool

    @property
    def eff_tail(self) -> int:
        return self.head if self.flipped else self.tail

    @property
    def eff_head(self) -> int:
        return self.tail if self.flipped else self.head


class DirectedMultigraph:
    """Arc-list multigraph with parallel arcs, self-loops and flippable arcs.

    Columns are stored as growable numpy arrays so that solver-side code can
    operate on flat views without copying.  ``vertex_labels`` maps internal
    dense vertex ids back to the caller's original numbering (identity unless
    the graph came out of :func:`scc_restrict`).
    """

    def __init__(self, n: int, s: int, t: int):
        if n <= 0:
            raise InputError("graph needs at least one vertex")
        if not (0 <= s < n and 0 <= t < n):
            raise InputError(f"terminals s={s}, t={t} out of range for n={n}")
        self.n = n
        self.s = s
        self.t = t
        self.flow_value = 0
        self.vertex_labels = np.arange(n, dtype=np.int64)
        self._cap = _INITIAL_CAPACITY
        self._len = 0
        self._tails = np.empty(self._cap, dtype=np.int32)
        self._heads = np.empty(self._cap, dtype=np.int32)
        self._tags = np.empty(self._cap, dtype=np.int8)
        self._flipped = np.zeros(self._cap, dtype=bool)
        self._alive = np.zeros(self._cap, dtype=bool)
        self._version = 0
        self._adj_cache: tuple[int, np.ndarray, np.ndarray, np.ndarray] | None = None

    # -- storage ---------------------------------------------------------

    def _grow(self) -> None:
        self._cap *= 2
        for name in ("_tails", "_heads", "_tags", "_flipped", "_alive"):
            old = getattr(self, name)
            new = np.zeros(self._cap, dtype=old.dtype)
            new[: self._len] = old[: self._len]
            setattr(self, name, new)

    def add_arc(self, tail: int, head: int, tag: int = ORIGINAL) -> int:
        if not (0 <= tail < self.n and 0 <= head < self.n):
            raise InputError(f"arc ({tail},{head}) out of range for n={self.n}")
        if self._len == self._cap:
            self._grow()
        i = self._len
        self._tails[i] = tail
        self._heads[i] = head
        self._tags[i] = tag
        self._flipped[i] = False
        self._alive[i] = True
        self._len += 1
        self._version += 1
        return i

    def remove_arc(self, arc_id: int) -> None:
        if not self._alive[arc_id]:
            raise InvariantViolation(f"arc {arc_id} already removed")
        self._alive[arc_id] = False
        self._version += 1

    def __len__(self) -> int:
        return int(self._alive[: self._len].sum())

    @property
    def num_arc_slots(self) -> int:
        """Number of arc ids ever issued, dead or alive."""
        return self._len

    # -- column views (zero-copy; do not resize while holding one) --------

    @property
    def tails(self) -> np.ndarray:
        return self._tails[: self._len]

    @property
    def heads(self) -> np.ndarray:
        return self._heads[: self._len]

    @property
    def tags(self) -> np.ndarray:
        return self._tags[: self._len]

    @property
    def flipped(self) -> np.ndarray:
        return self._flipped[: self._len]

    @property
    def alive(self) -> np.ndarray:
        return self._alive[: self._len]

    def arc(self, arc_id: int) -> Arc:
        if not (0 <= arc_id < self._len):
            raise InputError(f"no arc {arc_id}")
        return Arc(
            id=arc_id,
            tail=int(self._tails[arc_id]),
            head=int(self._heads[arc_id]),
            tag=int(self._tags[arc_id]),
            flipped=bool(self._flipped[arc_id]),
        )

    def live_arc_ids(self) -> np.ndarray:
        return np.flatnonzero(self._alive[: self._len])

    def eff_tails(self) -> np.ndarray:
        """Effective tail of every arc slot (orientation after flips)."""
        return np.where(self.flipped, self.heads, self.tails)

    def eff_heads(self) -> np.ndarray:
        return np.where(self.flipped, self.tails, self.heads)

    def copy(self) -> "DirectedMultigraph":
        g = DirectedMultigraph(self.n, self.s, self.t)
        g.flow_value = self.flow_value
        g.vertex_labels = self.vertex_labels.copy()
        g._cap = max(self._cap, _INITIAL_CAPACITY)
        g._len = self._len
        for name in ("_tails", "_heads", "_tags", "_flipped", "_alive"):
            setattr(g, name, getattr(self, name).copy())
        return g

    # -- adjacency ---------------------------------------------------------

    def _out_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR of live arc ids grouped by effective tail: (indptr, arc_ids)."""
        cache = self._adj_cache
        if cache is not None and cache[0] == self._version:
            return cache[1], cache[2]
        ids = self.live_arc_ids()
        eff_tail = np.where(self._flipped[ids], self._heads[ids], self._tails[ids])
        order = np.argsort(eff_tail, kind="stable")
        ids = ids[order]
        counts = np.bincount(eff_tail, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._adj_cache = (self._version, indptr, ids, eff_tail)
        return indptr, ids


# -- preprocessing ---------------------------------------------------------


def add_ts_links(g: DirectedMultigraph) -> DirectedMultigraph:
    """Return a copy of ``g`` with one (t, s) link per existing arc.

    The links force every residual graph with a remaining s-t path to be
    strongly connected; they are tagged so path search never uses them, which
    keeps the maximum s-t flow value unchanged.
    """
    m = len(g)
    if m == 0:
        raise InputError("cannot preprocess a graph with no arcs")
    if g.s == g.t:
        raise InputError("source and sink coincide")
    out = g.copy()
    for _ in range(m):
        out.add_arc(g.t, g.s, tag=TSLINK)
    return out


def strongly_connected_components(g: DirectedMultigraph) -> np.ndarray:
    """Label vertices by strongly connected component (iterative Tarjan).

    Components are numbered in reverse topological order of the condensation;
    only the partition matters to callers.
    """
    n = g.n
    indptr, arc_ids = g._out_csr()
    eff_heads = np.where(g._flipped[arc_ids], g._tails[arc_ids], g._heads[arc_ids])

    index = np.full(n, -1, dtype=np.int64)
    lowlink = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=bool)
    comp = np.full(n, -1, dtype=np.int64)
    stack: list[int] = []
    next_index = 0
    next_comp = 0

    for root in range(n):
        if index[root] != -1:
            continue
        # work stack holds (vertex, next out-arc offset)
        work = [(root, indptr[root])]
        index[root] = lowlink[root] = next_index
        next_index += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, ptr = work[-1]
            if ptr < indptr[v + 1]:
                work[-1] = (v, ptr + 1)
                w = int(eff_heads[ptr])
                if index[w] == -1:
                    index[w] = lowlink[w] = next_index
                    next_index += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, indptr[w]))
                elif on_stack[w]:
                    if index[w] < lowlink[v]:
                        lowlink[v] = index[w]
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    if lowlink[v] < lowlink[parent]:
                        lowlink[parent] = lowlink[v]
                if lowlink[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp[w] = next_comp
                        if w == v:
                            break
                    next_comp += 1
    return comp


def scc_restrict(g: DirectedMultigraph) -> DirectedMultigraph | None:
    """Restrict ``g`` to the strongly connected component shared by s and t.

    Returns ``None`` when s and t live in different components, which (in a
    graph that already carries the (t, s) links) certifies that the maximum
    flow is zero.  Vertex ids of the returned graph are re-densified; the
    original numbering is retained in ``vertex_labels``.
    """
    comp = strongly_connected_components(g)
    if comp[g.s] != comp[g.t]:
        return None
    keep = comp == comp[g.s]
    new_id = np.full(g.n, -1, dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    out = DirectedMultigraph(int(keep.sum()), int(new_id[g.s]), int(new_id[g.t]))
    out.vertex_labels = g.vertex_labels[keep].copy()
    out.flow_value = g.flow_value
    for i in g.live_arc_ids():
        u, v = int(g._tails[i]), int(g._heads[i])
        if keep[u] and keep[v]:
            j = out.add_arc(int(new_id[u]), int(new_id[v]), tag=int(g._tags[i]))
            out._flipped[j] = g._flipped[i]
    return out


# -- residual mechanics ------------------------------------------------------


def flip_path(g: DirectedMultigraph, path: list[int]) -> None:
    """Flip every arc along a simple effective-direction s-t path.

    ``path`` is a sequence of arc ids.  Rejects paths that are not simple,
    do not run from s to t, contain a dead arc, or touch a (t, s) link.
    """
    if not path:
        raise InputError("empty path")
    seen_vertices = set()
    prev_head: int | None = None
    for arc_id in path:
        if not g._alive[arc_id]:
            raise InputError(f"arc {arc_id} is not alive")
        if g._tags[arc_id] == TSLINK:
            raise InvariantViolation("augmenting path may not use a (t,s) link")
        a = g.arc(arc_id)
        u, v = a.eff_tail, a.eff_head
        if prev_head is None:
            if u != g.s:
                raise InputError(f"path starts at {u}, not s={g.s}")
        elif u != prev_head:
            raise InputError("path arcs are not contiguous")
        if u in seen_vertices:
            raise InputError("path is not simple")
        seen_vertices.add(u)
        prev_head = v
    if prev_head != g.t:
        raise InputError(f"path ends at {prev_head}, not t={g.t}")
    if prev_head in seen_vertices:
        raise InputError("path is not simple")
    for arc_id in path:
        g._flipped[arc_id] = not g._flipped[arc_id]
    g.flow_value += 1
    g._version += 1


def out_boundary(g: DirectedMultigraph, members) -> np.ndarray:
    """Arc ids whose effective tail is in ``members`` and head outside."""
    in_set = _member_mask(g, members)
    eff_tail = g.eff_tails()
    eff_head = g.eff_heads()
    mask = g.alive & in_set[eff_tail] & ~in_set[eff_head]
    return np.flatnonzero(mask)


def in_boundary(g: DirectedMultigraph, members) -> np.ndarray:
    """Arc ids whose effective head is in ``members`` and tail outside."""
    in_set = _member_mask(g, members)
    eff_tail = g.eff_tails()
    eff_head = g.eff_heads()
    mask = g.alive & in_set[eff_head] & ~in_set[eff_tail]
    return np.flatnonzero(mask)


def _member_mask(g: DirectedMultigraph, members) -> np.ndarray:
    mask = np.zeros(g.n, dtype=bool)
    idx = np.asarray(list(members) if not isinstance(members, np.ndarray) else members)
    if idx.size:
        mask[idx] = True
    return mask


def find_path(
    g: DirectedMultigraph,
    forbid_ts: bool = True,
    restrict_to=None,
) -> list[int] | None:
    """Shortest effective-direction s-t path as a list of arc ids (BFS).

    ``restrict_to`` limits the search to the given arc ids.  Returns ``None``
    when t is unreachable.
    """
    n = g.n
    parent_arc = np.full(n, -1, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    visited[g.s] = True
    if g.s == g.t:
        return []

    if restrict_to is not None:
        adj: dict[int, list[int]] = {}
        tags = g._tags
        for arc_id in restrict_to:
            if not g._alive[arc_id]:
                continue
            if forbid_ts and tags[arc_id] == TSLINK:
                continue
            u = int(g._heads[arc_id] if g._flipped[arc_id] else g._tails[arc_id])
            adj.setdefault(u, []).append(int(arc_id))
        queue = [g.s]
        while queue:
            nxt: list[int] = []
            for u in queue:
                for arc_id in adj.get(u, ()):
                    v = int(g._tails[arc_id] if g._flipped[arc_id] else g._heads[arc_id])
                    if not visited[v]:
                        visited[v] = True
                        parent_arc[v] = arc_id
                        if v == g.t:
                            return _walk_back(g, parent_arc)
                        nxt.append(v)
            queue = nxt
        return None

    indptr, arc_ids = g._out_csr()
    eff_heads = np.where(g._flipped[arc_ids], g._tails[arc_ids], g._heads[arc_ids])
    tags = g._tags
    queue = [g.s]
    while queue:
        nxt = []
        for u in queue:
            for k in range(indptr[u], indptr[u + 1]):
                arc_id = int(arc_ids[k])
                if forbid_ts and tags[arc_id] == TSLINK:
                    continue
                v = int(eff_heads[k])
                if not visited[v]:
                    visited[v] = True
                    parent_arc[v] = arc_id
                    if v == g.t:
                        return _walk_back(g, parent_arc)
                    nxt.append(v)
        queue = nxt
    return None


def _walk_back(g: DirectedMultigraph, parent_arc: np.ndarray) -> list[int]:
    path = []
    v = g.t
    while v != g.s:
        arc_id = int(parent_arc[v])
        path.append(arc_id)
        v = int(g._heads[arc_id] if g._flipped[arc_id] else g._tails[arc_id])
    path.reverse()
    return path


def is_strongly_connected(g: DirectedMultigraph) -> bool:
    """Double BFS over the effective orientation (all live arcs count)."""
    if g.n == 1:
        return True
    ids = g.live_arc_ids()
    eff_tail = np.where(g._flipped[ids], g._heads[ids], g._tails[ids])
    eff_head = np.where(g._flipped[ids], g._tails[ids], g._heads[ids])
    return _reaches_all(g.n, eff_tail, eff_head) and _reaches_all(g.n, eff_head, eff_tail)


def _reaches_all(n: int, tails: np.ndarray, heads: np.ndarray) -> bool:
    order = np.argsort(tails, kind="stable")
    tails_sorted = tails[order]
    heads_sorted = heads[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(tails_sorted, minlength=n), out=indptr[1:])
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    queue = [0]
    count = 1
    while queue:
        u = queue.pop()
        for k in range(indptr[u], indptr[u + 1]):
            v = int(heads_sorted[k])
            if not visited[v]:
                visited[v] = True
                count += 1
                queue.append(v)
    return count == n


# -- flow decomposition ------------------------------------------------------


def extract_flow_paths(g: DirectedMultigraph) -> list[list[int]]:
    """Decompose the flipped Original arcs into s-t vertex paths.

    Paths are reported in the original orientation and are arc-disjoint.
    Flow cycles (flipped arcs not needed by any s-t path) are cancelled and
    discarded.  Raises when the flipped arcs violate conservation at a vertex
    other than s or t.
    """
    out_arcs: dict[int, list[int]] = {}
    indeg = np.zeros(g.n, dtype=np.int64)
    outdeg = np.zeros(g.n, dtype=np.int64)
    for arc_id in g.live_arc_ids():
        if g._flipped[arc_id] and g._tags[arc_id] == ORIGINAL:
            u, v = int(g._tails[arc_id]), int(g._heads[arc_id])
            out_arcs.setdefault(u, []).append(arc_id)
            outdeg[u] += 1
            indeg[v] += 1
    excess = outdeg - indeg
    for v in range(g.n):
        if v not in (g.s, g.t) and excess[v] != 0:
            raise InvariantViolation(
                f"flow conservation violated at vertex {v} (excess {excess[v]})"
            )
    value = int(excess[g.s])
    if value < 0 or excess[g.t] != -value:
        raise InvariantViolation("flow excess at terminals is inconsistent")

    paths: list[list[int]] = []
    for _ in range(value):
        verts = [g.s]
        pos = {g.s: 0}
        while verts[-1] != g.t:
            v = verts[-1]
            bucket = out_arcs.get(v)
            if not bucket:
                raise InvariantViolation(f"walk from s stuck at vertex {v}")
            arc_id = bucket.pop()
            w = int(g._heads[arc_id])
            if w in pos:
                # flow cycle: erase it from the walk and discard its arcs
                k = pos[w]
                for dropped in verts[k + 1 :]:
                    del pos[dropped]
                del verts[k + 1 :]
            else:
                pos[w] = len(verts)
                verts.append(w)
        paths.append(verts)
    return paths
