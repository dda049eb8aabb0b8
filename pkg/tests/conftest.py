import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from balflow.balance import PotentialState
from balflow.graph import DirectedMultigraph, add_ts_links, scc_restrict


def make_graph(n: int, arcs, s: int = 0, t: int | None = None) -> DirectedMultigraph:
    g = DirectedMultigraph(n, s, n - 1 if t is None else t)
    for u, v in arcs:
        g.add_arc(u, v)
    return g


def random_arcs(n: int, m: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """m distinct non-loop ordered pairs."""
    seen = set()
    while len(seen) < min(m, n * (n - 1)):
        u, v = int(rng.integers(n)), int(rng.integers(n))
        if u != v:
            seen.add((u, v))
    return sorted(seen)


def preprocessed(n: int, m: int, seed: int) -> DirectedMultigraph | None:
    """Random digraph, (t,s)-linked and restricted to the s-t component."""
    rng = np.random.default_rng(seed)
    g = make_graph(n, random_arcs(n, m, rng))
    if len(g) == 0:
        return None
    return scc_restrict(add_ts_links(g))


def fresh_state(g: DirectedMultigraph, horizon: float | None = None) -> PotentialState:
    return PotentialState(g, horizon=float(g.n) ** 4 if horizon is None else horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
