"""DIMACS max-flow format with capacity expansion to parallel unit arcs.

Lines: ``p max <n> <m>``, ``n <id> s``, ``n <id> t``, ``a <u> <v> <cap>``.
Vertex ids are 1-based on disk, 0-based in memory.  Integer capacities are
expanded into that many parallel unit arcs because the solver is
uncapacitated.
"""

from __future__ import annotations

from .errors import InputError
from .graph import DirectedMultigraph

MAX_EXPANDED_ARCS = 10_000_000


def parse_dimacs(path: str) -> DirectedMultigraph:
    """Read a DIMACS max-flow file into a unit-capacity multigraph."""
    n = None
    s = None
    t = None
    arcs: list[tuple[int, int, int]] = []
    total = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            parts = line.split()
            kind = parts[0]
            try:
                if kind == "p":
                    if len(parts) != 4 or parts[1] != "max":
                        raise ValueError("expected 'p max <n> <m>'")
                    n = int(parts[2])
                    int(parts[3])
                elif kind == "n":
                    if len(parts) != 3 or parts[2] not in ("s", "t"):
                        raise ValueError("expected 'n <id> s|t'")
                    if parts[2] == "s":
                        s = int(parts[1]) - 1
                    else:
                        t = int(parts[1]) - 1
                elif kind == "a":
                    if len(parts) != 4:
                        raise ValueError("expected 'a <u> <v> <cap>'")
                    u, v, cap = int(parts[1]) - 1, int(parts[2]) - 1, int(parts[3])
                    if cap <= 0:
                        raise ValueError("capacity must be a positive integer")
                    total += cap
                    if total > MAX_EXPANDED_ARCS:
                        raise ValueError(
                            f"capacity expansion exceeds {MAX_EXPANDED_ARCS} arcs"
                        )
                    arcs.append((u, v, cap))
                else:
                    raise ValueError(f"unknown line type {kind!r}")
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if n is None:
        raise InputError(f"{path}: missing 'p max' header")
    if s is None or t is None:
        raise InputError(f"{path}: missing source/sink designation")
    g = DirectedMultigraph(n, s, t)
    for u, v, cap in arcs:
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"{path}: arc ({u + 1},{v + 1}) out of range")
        for _ in range(cap):
            g.add_arc(u, v)
    return g


def write_dimacs(g: DirectedMultigraph, path: str) -> None:
    """Write a unit-capacity multigraph, merging parallel arcs into capacities."""
    counts: dict[tuple[int, int], int] = {}
    for arc_id in g.live_arc_ids():
        a = g.arc(int(arc_id))
        key = (a.tail, a.head)
        counts[key] = counts.get(key, 0) + 1
    with open(path, "w") as fh:
        fh.write(f"p max {g.n} {len(counts)}\n")
        fh.write(f"n {g.s + 1} s\n")
        fh.write(f"n {g.t + 1} t\n")
        for (u, v), cap in sorted(counts.items()):
            fh.write(f"a {u + 1} {v + 1} {cap}\n")
