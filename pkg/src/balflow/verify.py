"""Brute-force invariant checks on small random instances.

Each check generates fresh instances, exercises one piece of the solver, and
validates it against an exhaustive or independently coded oracle.  The CLI's
``verify`` command runs them all; the test suite runs stronger versions.
"""

from __future__ import annotations

import itertools

import numpy as np

from .balance import PotentialState
from .dinic import dinic_maxflow
from .expander import LoopedGraph, decompose, _exact_enum_numpy
from .graph import add_ts_links, in_boundary, out_boundary, scc_restrict
from .instances import InstanceSpec, generate
from .ratio_cut import (
    OracleConfig,
    balance_loop,
    brute_force_min_ratio_cut,
    dinkelbach_min_ratio_cut,
)
from .solver import SolverConfig, solve


def _random_state(n: int, m: int, seed: int) -> PotentialState | None:
    g = generate(InstanceSpec(model="uniform-digraph", n=n, m=m, seed=seed))
    g = add_ts_links(g)
    g = scc_restrict(g)
    if g is None:
        return None
    state = PotentialState(g, horizon=float(g.n) ** 4)
    rng = np.random.default_rng(seed + 1)
    state.potentials[:] = rng.uniform(-2.0, 2.0, g.n)
    for arc_id in g.live_arc_ids():
        state.refresh_arc(int(arc_id))
    return state


def check_gradient_identity(trials: int = 20, seed: int = 0) -> tuple[bool, str]:
    """g(S) equals boundary out-weight minus in-weight, every cut, n <= 10."""
    worst = 0.0
    for k in range(trials):
        state = _random_state(8, 20, seed + 17 * k)
        if state is None:
            continue
        g = state.graph
        for size in range(1, g.n):
            for members in itertools.combinations(range(g.n), size):
                out_w = state.approx_weight[out_boundary(g, members)].sum()
                in_w = state.approx_weight[in_boundary(g, members)].sum()
                got = state.gradient_cut_value(members)
                worst = max(worst, abs(got - (out_w - in_w)))
    return worst <= 1e-9, f"max |g(S) - (w+ - w-)| = {worst:.2e}"


def check_balance_postcondition(trials: int = 10, seed: int = 0) -> tuple[bool, str]:
    """After the toggle loop, every cut keeps 1/9 of its weight outbound."""
    worst = 1.0
    for k in range(trials):
        state = _random_state(7, 14, seed + 29 * k)
        if state is None:
            continue
        state.potentials[:] = 0.0
        for arc_id in state.graph.live_arc_ids():
            state.refresh_arc(int(arc_id))
        balance_loop(state, OracleConfig(method="dinkelbach"))
        g = state.graph
        for size in range(1, g.n):
            for members in itertools.combinations(range(g.n), size):
                out_w = state.approx_weight[out_boundary(g, members)].sum()
                in_w = state.approx_weight[in_boundary(g, members)].sum()
                total = out_w + in_w
                if total > 0:
                    worst = min(worst, out_w / total)
    return worst >= 1.0 / 9.0 - 1e-9, f"min out-fraction = {worst:.4f} (need >= 1/9)"


def check_oracle_agreement(trials: int = 30, seed: int = 0) -> tuple[bool, str]:
    """Dinkelbach matches exhaustive enumeration on random weighted graphs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < trials:
        n = int(rng.integers(3, 11))
        m = int(rng.integers(n, n * (n - 1) // 2 + n))
        edges = []
        for v in range(1, n):
            u = int(rng.integers(v))
            edges.append((u, v, float(rng.uniform(0.05, 1.0))))
        for _ in range(m - n + 1):
            u = int(rng.integers(n))
            v = int(rng.integers(n))
            if u != v:
                edges.append((u, v, float(rng.uniform(0.05, 1.0))))
        grad = rng.normal(size=n)
        grad -= grad.mean()
        a = brute_force_min_ratio_cut(n, edges, grad)
        b = dinkelbach_min_ratio_cut(n, edges, grad)
        worst = max(worst, abs(a.ratio - b.ratio))
        done += 1
    return worst <= 1e-7, f"max ratio gap = {worst:.2e}"


def check_expander_certificates(trials: int = 10, seed: int = 0) -> tuple[bool, str]:
    """Every small cluster of a decomposition survives exhaustive checking."""
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(trials):
        n = int(rng.integers(6, 15))
        edges = []
        for _ in range(3 * n):
            u, v = int(rng.integers(n)), int(rng.integers(n))
            if u != v:
                edges.append((u, v))
        g = LoopedGraph.from_edges(n, edges, loops=np.ones(n, dtype=np.int64))
        part = decompose(g, 0.15)
        label = part.cluster_of(n)
        for cl in part.clusters:
            if not 1 < cl.size <= 16:
                continue
            local = np.full(n, -1, dtype=np.int64)
            local[cl] = np.arange(cl.size)
            sel = (local[g.edges[:, 0]] >= 0) & (local[g.edges[:, 1]] >= 0)
            eu = local[g.edges[sel, 0]]
            ev = local[g.edges[sel, 1]]
            deg = 2 * g.loops[cl]
            if eu.size:
                deg = deg + np.bincount(np.concatenate([eu, ev]), minlength=cl.size)
            best, _ = _exact_enum_numpy(deg, eu, ev)
            checked += 1
            if best < part.phi / part.slack - 1e-12:
                return False, f"cluster {cl} has conductance {best}"
        del label
    return True, f"{checked} clusters verified exhaustively"


def check_solver_agreement(trials: int = 25, seed: int = 0) -> tuple[bool, str]:
    """Balanced solve equals blocking-flow max flow on random instances."""
    rng = np.random.default_rng(seed)
    for k in range(trials):
        model = ("uniform-digraph", "layered", "two-cliques-bridge", "unbalanced-cut")[
            k % 4
        ]
        n = int(rng.integers(4, 14))
        spec = InstanceSpec(
            model=model,
            n=n,
            m=int(rng.integers(n, 3 * n)),
            seed=int(rng.integers(2**31)),
            reverse_arcs=int(rng.integers(1, max(2, n))),
        )
        g = generate(spec)
        a = dinic_maxflow(g.copy()).value
        b = solve(g.copy(), SolverConfig()).value
        if a != b:
            return False, f"disagreement on {spec.label()}: dinic={a} balanced={b}"
    return True, f"{trials} instances agree"


ALL_CHECKS = (
    ("gradient-identity", check_gradient_identity),
    ("balance-postcondition", check_balance_postcondition),
    ("oracle-agreement", check_oracle_agreement),
    ("expander-certificates", check_expander_certificates),
    ("solver-agreement", check_solver_agreement),
)


def run_all(seed: int = 0, log=None) -> bool:
    ok_all = True
    for name, fn in ALL_CHECKS:
        ok, detail = fn(seed=seed)
        ok_all &= ok
        if log is not None:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=log)
    return ok_all
