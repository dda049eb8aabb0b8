"""Random instance generators for testing and benchmarking.

All models emit simple digraphs (no parallel arcs, no self-loops) and are
deterministic in the seed.  The ``unbalanced-cut`` model plants a cut with a
single forward arc and many reverse arcs, the configuration that defeats
unweighted residual sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import DirectedMultigraph

MODELS = ("uniform-digraph", "layered", "two-cliques-bridge", "unbalanced-cut")


@dataclass
class InstanceSpec:
    model: str = "uniform-digraph"
    n: int = 10
    m: int = 30
    seed: int = 0
    # model-specific knobs
    layers: int = 3
    width: int = 2
    reverse_arcs: int = 20
    name: str = ""
    extras: dict = field(default_factory=dict)

    def label(self) -> str:
        return self.name or f"{self.model}-n{self.n}-m{self.m}-s{self.seed}"


def generate(spec: InstanceSpec) -> DirectedMultigraph:
    """Build the instance described by ``spec`` (deterministic in seed)."""
    if spec.model not in MODELS:
        raise InputError(f"unknown generator model {spec.model!r}")
    if spec.n < 2:
        raise InputError("need at least two vertices")
    rng = np.random.default_rng(spec.seed)
    if spec.model == "uniform-digraph":
        return _uniform(spec, rng)
    if spec.model == "layered":
        return _layered(spec, rng)
    if spec.model == "two-cliques-bridge":
        return _two_cliques(spec, rng)
    return _unbalanced_cut(spec, rng)


def _add_unique(g: DirectedMultigraph, used: set, u: int, v: int) -> bool:
    if u == v or (u, v) in used:
        return False
    used.add((u, v))
    g.add_arc(u, v)
    return True


def _uniform(spec: InstanceSpec, rng: np.random.Generator) -> DirectedMultigraph:
    n, m = spec.n, spec.m
    if m > n * (n - 1):
        raise InputError(f"m={m} exceeds the {n * (n - 1)} ordered pairs of n={n}")
    g = DirectedMultigraph(n, 0, n - 1)
    used: set = set()
    # sample ordered pairs without replacement via a flat index draw
    pairs = rng.choice(n * n, size=min(n * n, 4 * m + 16), replace=False)
    for p in pairs:
        if len(used) == m:
            break
        _add_unique(g, used, int(p) // n, int(p) % n)
    while len(used) < m:
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        _add_unique(g, used, u, v)
    return g


def _layered(spec: InstanceSpec, rng: np.random.Generator) -> DirectedMultigraph:
    """s -> layer_1 -> ... -> layer_k -> t with a full matching per step.

    Extra forward arcs may be added, but the cut around s keeps the maximum
    flow pinned to the layer width.
    """
    width = max(1, spec.width)
    layers = max(1, spec.layers)
    n = 2 + width * layers
    g = DirectedMultigraph(n, 0, n - 1)
    used: set = set()

    def vertex(layer: int, slot: int) -> int:
        return 1 + layer * width + slot

    for slot in range(width):
        _add_unique(g, used, 0, vertex(0, slot))
        _add_unique(g, used, vertex(layers - 1, slot), n - 1)
    for layer in range(layers - 1):
        perm = rng.permutation(width)
        for slot in range(width):
            _add_unique(g, used, vertex(layer, slot), vertex(layer + 1, int(perm[slot])))
        # sprinkle extra forward arcs inside the layer pair
        extras = int(rng.integers(0, width + 1))
        for _ in range(extras):
            _add_unique(
                g,
                used,
                vertex(layer, int(rng.integers(width))),
                vertex(layer + 1, int(rng.integers(width))),
            )
    return g


def _two_cliques(spec: InstanceSpec, rng: np.random.Generator) -> DirectedMultigraph:
    """Two bidirected cliques joined by a single forward bridge arc."""
    half = max(2, spec.n // 2)
    n = 2 * half
    g = DirectedMultigraph(n, 0, n - 1)
    used: set = set()
    for block in (range(half), range(half, n)):
        for u in block:
            for v in block:
                if u != v:
                    _add_unique(g, used, u, v)
    left = int(rng.integers(half))
    right = int(half + rng.integers(half))
    _add_unique(g, used, left, right)
    return g


def _unbalanced_cut(spec: InstanceSpec, rng: np.random.Generator) -> DirectedMultigraph:
    """Planted cut with one forward arc and ``reverse_arcs`` backward arcs."""
    n = max(4, spec.n)
    half = n // 2
    k = spec.reverse_arcs
    if k > half * (n - half) - 1:
        raise InputError(f"reverse_arcs={k} does not fit the planted cut of n={n}")
    g = DirectedMultigraph(n, 0, n - 1)
    used: set = set()
    side_a = list(range(half))          # contains s
    side_b = list(range(half, n))       # contains t
    bridge_tail = int(rng.choice(side_a))
    bridge_head = int(rng.choice(side_b))
    _add_unique(g, used, bridge_tail, bridge_head)
    # connect s to the bridge tail and the bridge head to t inside the sides
    _path_inside(g, used, side_a, 0, bridge_tail, rng)
    _path_inside(g, used, side_b, bridge_head, n - 1, rng)
    # random intra-side arcs keep both sides strongly connected-ish
    for side in (side_a, side_b):
        for _ in range(2 * len(side)):
            u = int(rng.choice(side))
            v = int(rng.choice(side))
            _add_unique(g, used, u, v)
    added = 0
    while added < k:
        u = int(rng.choice(side_b))
        v = int(rng.choice(side_a))
        if _add_unique(g, used, u, v):
            added += 1
    return g


def _path_inside(g, used, side, start, goal, rng) -> None:
    if start == goal:
        return
    others = [v for v in side if v not in (start, goal)]
    rng.shuffle(others)
    hops = [start] + others[: int(rng.integers(0, min(2, len(others)) + 1))] + [goal]
    for u, v in zip(hops, hops[1:]):
        _add_unique(g, used, u, v)


def planted_forward_arc(g: DirectedMultigraph) -> int:
    """Arc id of the unique forward arc across the planted cut.

    Only meaningful for ``unbalanced-cut`` instances: the planted cut is the
    lower half of the vertex range.
    """
    half = g.n // 2
    candidates = [
        int(i)
        for i in g.live_arc_ids()
        if g.arc(int(i)).tail < half <= g.arc(int(i)).head
    ]
    if len(candidates) != 1:
        raise InputError("graph does not look like an unbalanced-cut instance")
    return candidates[0]
