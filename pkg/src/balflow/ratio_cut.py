"""Minimum-ratio-cut oracles and the cut-toggling balance loop.

The oracle answers: over all proper nonempty vertex sets S of a positively
weighted undirected graph with a gradient vector summing to zero, minimise
gradient(S) / weight(boundary S).  Toggling the returned cut (raising every
potential on the negative side by a small step) provably burns energy, so the
loop terminates with every cut's out/in weights within a constant factor.

Two exact oracles: exhaustive enumeration for tiny graphs, and Dinkelbach
fractional programming (a short sequence of parametric min-cuts) for the
production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _fast
from .balance import EnergyLedger, PotentialState
from .dinic import CapacitatedNetwork, capacitated_maxflow
from .errors import ConvergenceError, InputError, InvariantViolation

# Certified per-toggle energy decrease at alpha=1, eps=1/8, eta=1/(16u).
# The inequality chain bottoms out at 68/11907 ~ 0.0057; 1/256 is the frozen
# loop-guard floor, validated numerically by the test suite.
ENERGY_DECREASE_FLOOR = 1.0 / 256.0

TRIVIAL_GRADIENT_EPS = 1e-12


@dataclass(frozen=True)
class RatioCut:
    """A certified cut: gradient mass, boundary weight and their ratio."""

    members: tuple[int, ...]
    g_val: float
    u_val: float
    ratio: float


@dataclass
class OracleConfig:
    alpha: float = 1.0
    method: str = "dinkelbach"  # "brute" | "dinkelbach"
    dinkelbach_tol: float = 1e-12
    max_brute_n: int = 16


def _check_edges_connected(n: int, edges: Sequence[tuple[int, int, float]]) -> None:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, w in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"edge endpoint out of range: ({u},{v})")
        if w <= 0.0:
            raise InputError("edge weights must be positive")
        if u != v:
            parent[find(u)] = find(v)
    roots = {find(v) for v in range(n)}
    if len(roots) != 1:
        raise InputError("underlying undirected graph must be connected")


def brute_force_min_ratio_cut(
    n: int,
    edges: Sequence[tuple[int, int, float]],
    gradient: Sequence[float],
    max_brute_n: int = 16,
) -> RatioCut:
    """Exact minimiser over all proper nonempty cut sides by enumeration.

    Ties are broken toward the lexicographically smallest member set.
    """
    if n < 2:
        raise InputError("need at least two vertices")
    if n > max_brute_n:
        raise InputError(f"brute force limited to {max_brute_n} vertices, got {n}")
    _check_edges_connected(n, edges)
    grad = np.asarray(gradient, dtype=np.float64)
    masks = np.arange(1, (1 << n) - 1, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    g_of = bits @ grad
    w_of = np.zeros(len(masks), dtype=np.float64)
    for u, v, w in edges:
        if u != v:
            w_of += np.where(bits[:, u] != bits[:, v], w, 0.0)
    ratios = g_of / w_of
    best = float(ratios.min())
    tied = np.flatnonzero(ratios == best)
    members, k = min(
        (tuple(int(v) for v in range(n) if bits[cand, v]), int(cand)) for cand in tied
    )
    return RatioCut(
        members=members,
        g_val=float(g_of[k]),
        u_val=float(w_of[k]),
        ratio=best,
    )


def _aggregate_pairs(
    edges: Sequence[tuple[int, int, float]],
) -> dict[tuple[int, int], float]:
    pairs: dict[tuple[int, int], float] = {}
    for u, v, w in edges:
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        pairs[key] = pairs.get(key, 0.0) + w
    return pairs


def _cut_weight_of(pairs: dict[tuple[int, int], float], members: set[int]) -> float:
    return sum(w for (u, v), w in pairs.items() if (u in members) != (v in members))


def dinkelbach_min_ratio_cut(
    n: int,
    edges: Sequence[tuple[int, int, float]],
    gradient: Sequence[float],
    tol: float = 1e-12,
    warm: Sequence[int] | None = None,
    ratio_history: list[float] | None = None,
) -> RatioCut:
    """Exact minimum ratio cut via parametric min-cut iterations.

    Each iteration solves min over S of gradient(S) + lam * weight(boundary S)
    through the standard reduction: an auxiliary source feeds vertices with
    negative gradient, vertices with positive gradient drain to an auxiliary
    sink, and every undirected edge becomes a pair of opposite arcs with
    capacity lam * weight.  The achieved ratio sequence is strictly
    decreasing, so the loop terminates; a generous iteration budget guards
    against numeric trouble.
    """
    if n < 2:
        raise InputError("need at least two vertices")
    _check_edges_connected(n, edges)
    grad = np.asarray(gradient, dtype=np.float64)
    pairs = _aggregate_pairs(edges)

    vmin = int(np.argmin(grad))
    if grad[vmin] >= -TRIVIAL_GRADIENT_EPS:
        members = {vmin}
        return RatioCut(
            members=(vmin,),
            g_val=min(float(grad[vmin]), 0.0),
            u_val=_cut_weight_of(pairs, members),
            ratio=0.0,
        )

    pneg = float(-grad[grad < 0.0].sum())
    tol_abs = tol * max(1.0, pneg)

    members: set[int] = set()
    if warm is not None:
        members = set(int(v) for v in warm)
    g_cur = float(grad[list(members)].sum()) if members else 0.0
    u_cur = _cut_weight_of(pairs, members) if members else 0.0
    if not (0 < len(members) < n and g_cur < 0.0 and u_cur > 0.0):
        members = {vmin}
        g_cur = float(grad[vmin])
        u_cur = _cut_weight_of(pairs, members)
    lam = -g_cur / u_cur
    if ratio_history is not None:
        ratio_history.append(-lam)

    sigma, tau = n, n + 1
    for _ in range(10 * (n + 2)):
        net = CapacitatedNetwork(n + 2)
        for v in range(n):
            if grad[v] < 0.0:
                net.add_arc(sigma, v, -float(grad[v]))
            elif grad[v] > 0.0:
                net.add_arc(v, tau, float(grad[v]))
        for (u, v), w in pairs.items():
            cap = lam * w
            net.add_arc(u, v, cap)
            net.add_arc(v, u, cap)
        flow, side = capacitated_maxflow(net, sigma, tau)
        if flow >= pneg - tol_abs:
            break
        new_members = {int(v) for v in side if v < n}
        if not (0 < len(new_members) < n):
            break
        g_new = float(grad[list(new_members)].sum())
        u_new = _cut_weight_of(pairs, new_members)
        if u_new <= 0.0:
            break
        ratio_new = g_new / u_new
        if ratio_new >= -lam - 1e-15:
            break
        members, g_cur, u_cur = new_members, g_new, u_new
        lam = -ratio_new
        if ratio_history is not None:
            ratio_history.append(-lam)
    else:
        raise ConvergenceError("Dinkelbach iteration budget exhausted")
    return RatioCut(
        members=tuple(sorted(members)),
        g_val=g_cur,
        u_val=u_cur,
        ratio=-lam,
    )


# -- state-level oracle and toggling ------------------------------------------


def _state_edges(state: PotentialState) -> list[tuple[int, int, float]]:
    g = state.graph
    edges = []
    for arc_id in g.live_arc_ids():
        u, v = int(g.tails[arc_id]), int(g.heads[arc_id])
        if u != v:
            edges.append((u, v, float(state.approx_weight[arc_id])))
    return edges


def min_ratio_cut(
    state: PotentialState,
    cfg: OracleConfig,
    warm: Sequence[int] | None = None,
) -> RatioCut:
    """Query the configured oracle on the state's undirected weighted image."""
    n = state.graph.n
    edges = _state_edges(state)
    if cfg.method == "brute":
        rc = brute_force_min_ratio_cut(n, edges, state.gradient, cfg.max_brute_n)
    elif cfg.method == "dinkelbach":
        rc = dinkelbach_min_ratio_cut(
            n, edges, state.gradient, tol=cfg.dinkelbach_tol, warm=warm
        )
    else:
        raise InputError(f"unknown oracle method {cfg.method!r}")
    _recheck_soundness(state, rc)
    return rc


def _recheck_soundness(state: PotentialState, rc: RatioCut) -> None:
    g_direct = float(state.gradient[list(rc.members)].sum())
    if abs(g_direct - rc.g_val) > 1e-6 * max(1.0, abs(g_direct)):
        raise InvariantViolation(
            f"oracle g_val {rc.g_val} disagrees with gradient sum {g_direct}"
        )
    if rc.u_val <= 0.0:
        raise InvariantViolation("oracle returned a nonpositive boundary weight")


def toggle_cut(state: PotentialState, rc: RatioCut, eta: float) -> np.ndarray:
    """Raise the potential of every cut member by ``eta``; report drifted arcs.

    The caller must refresh every returned arc before the next oracle query.
    """
    if not (0.0 < eta <= 1.0 / rc.u_val * (1.0 + 1e-12)):
        raise InputError(f"eta={eta} outside (0, 1/u] for u={rc.u_val}")
    members = list(rc.members)
    if not (0 < len(members) < state.graph.n):
        raise InputError("toggled cut must be a proper nonempty subset")
    state.potentials[members] += eta
    return state.drifted_arcs()


def toggle_energy_delta(state: PotentialState, members, eta: float) -> float:
    """Exact energy change a toggle of ``members`` by ``eta`` will cause."""
    g = state.graph
    ids = g.live_arc_ids()
    in_cut = np.zeros(g.n, dtype=bool)
    in_cut[list(members)] = True
    eff_tail = np.where(g.flipped[ids], g.heads[ids], g.tails[ids])
    eff_head = np.where(g.flipped[ids], g.tails[ids], g.heads[ids])
    crossing = in_cut[eff_tail] != in_cut[eff_head]
    if not crossing.any():
        return 0.0
    gaps = (state.potentials[eff_head] - state.potentials[eff_tail])[crossing]
    sign = np.where(in_cut[eff_tail[crossing]], -1.0, 1.0)
    gaps2 = gaps + sign * eta

    def tail_integral(x: np.ndarray) -> np.ndarray:
        # energy minus the horizon constant, which cancels in differences
        return np.where(x >= 0.0, -np.log1p(np.maximum(x, 0.0)), -x)

    return float((tail_integral(gaps2) - tail_integral(gaps)).sum())


def balance_loop(
    state: PotentialState,
    cfg: OracleConfig,
    ledger: EnergyLedger | None = None,
    runtime: "BalanceRuntime | None" = None,
) -> int:
    """Toggle min-ratio cuts until the minimum ratio exceeds -1/(3*alpha).

    Every toggle uses step 1/(16*alpha*u) and is followed by refreshing the
    arcs whose drift crossed the detection threshold.  On exit every cut has
    out-boundary weight at least 1/9 of its total boundary weight.  Returns
    the number of toggles performed.
    """
    for arc_id in state.drifted_arcs():
        state.refresh_arc(int(arc_id))
    if runtime is not None and cfg.method == "dinkelbach" and _fast.HAVE_NUMBA:
        return runtime.run(state, cfg, ledger)

    e_start = state.total_energy()
    max_toggles = math.ceil(e_start / ENERGY_DECREASE_FLOOR) + 1
    threshold = -1.0 / (3.0 * cfg.alpha)
    toggles = 0
    warm: tuple[int, ...] | None = None
    while True:
        rc = min_ratio_cut(state, cfg, warm=warm)
        if rc.ratio > threshold:
            break
        if toggles >= max_toggles:
            raise InvariantViolation(
                f"balance loop exceeded its certified toggle budget {max_toggles}"
            )
        eta = 1.0 / (16.0 * cfg.alpha * rc.u_val)
        delta = toggle_energy_delta(state, rc.members, eta)
        drifted = toggle_cut(state, rc, eta)
        for arc_id in drifted:
            state.refresh_arc(int(arc_id))
        if ledger is not None:
            ledger.record_toggle(delta)
        toggles += 1
        warm = rc.members
    state.check_horizon()
    return toggles


# -- fused-kernel runtime ------------------------------------------------------


class BalanceRuntime:
    """Flat-array mirror of one solve's balance state for the fused kernel.

    Built once per solve: the arc set and the unordered endpoint pairs never
    change afterwards, only orientations and weights do.  ``refresh`` must be
    called after augmentations to resnapshot effective orientations.
    """

    def __init__(self, state: PotentialState):
        g = state.graph
        n = g.n
        self.n = n
        live = g.live_arc_ids().astype(np.int64)
        self.a_id = live
        tails = g.tails[live]
        heads = g.heads[live]
        pair_key: dict[tuple[int, int], int] = {}
        a_pair = np.full(live.size, -1, dtype=np.int64)
        for i in range(live.size):
            u, v = int(tails[i]), int(heads[i])
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            idx = pair_key.setdefault(key, len(pair_key))
            a_pair[i] = idx
        self.a_pair = a_pair
        P = len(pair_key)
        self.pair_u = np.empty(P, dtype=np.int64)
        self.pair_v = np.empty(P, dtype=np.int64)
        for (u, v), idx in pair_key.items():
            self.pair_u[idx] = u
            self.pair_v[idx] = v
        self.pair_w = np.zeros(P, dtype=np.float64)

        # parametric min-cut network: nodes 0..n-1, sigma=n, tau=n+1;
        # per vertex four edge slots, per pair two, reverse partner = id ^ 1
        N = n + 2
        E = 4 * n + 2 * P
        etails = np.empty(E, dtype=np.int64)
        self.eto = np.empty(E, dtype=np.int64)
        for v in range(n):
            e = 4 * v
            etails[e] = n
            self.eto[e] = v
            etails[e + 1] = v
            self.eto[e + 1] = n
            etails[e + 2] = v
            self.eto[e + 2] = n + 1
            etails[e + 3] = n + 1
            self.eto[e + 3] = v
        base = 4 * n
        for p in range(P):
            etails[base + 2 * p] = self.pair_u[p]
            self.eto[base + 2 * p] = self.pair_v[p]
            etails[base + 2 * p + 1] = self.pair_v[p]
            self.eto[base + 2 * p + 1] = self.pair_u[p]
        self.indptr, self.eids = _fast.build_csr(N, etails)
        self.ecap = np.zeros(E, dtype=np.float64)
        self.level = np.empty(N, dtype=np.int64)
        self.it = np.empty(N, dtype=np.int64)
        self.queue = np.empty(N, dtype=np.int64)
        self.path_v = np.empty(N + 1, dtype=np.int64)
        self.path_e = np.empty(N + 1, dtype=np.int64)
        self.mark = np.zeros(N, dtype=np.uint8)
        self.cut_mask = np.zeros(n, dtype=np.uint8)
        self.warm = 0

        self.a_tail = np.empty(live.size, dtype=np.int64)
        self.a_head = np.empty(live.size, dtype=np.int64)
        self.ref_ids = np.empty(live.size + 4096, dtype=np.int64)
        self.ref_w = np.empty(live.size + 4096, dtype=np.float64)
        self.tog_delta = np.empty(8192, dtype=np.float64)
        self.tog_eta = np.empty(8192, dtype=np.float64)
        self.tog_usize = np.empty(8192, dtype=np.float64)
        self.state_io = np.zeros(4, dtype=np.int64)
        self.out_f = np.zeros(2, dtype=np.float64)
        self.last_exit_ratio = math.nan

    def resnapshot(self, state: PotentialState) -> None:
        """Refresh effective orientations and pair weights from the state."""
        g = state.graph
        live = self.a_id
        flipped = g.flipped[live]
        self.a_tail[:] = np.where(flipped, g.heads[live], g.tails[live])
        self.a_head[:] = np.where(flipped, g.tails[live], g.heads[live])
        self.pair_w[:] = 0.0
        nonloop = self.a_pair >= 0
        np.add.at(self.pair_w, self.a_pair[nonloop], state.approx_weight[live[nonloop]])

    def run(
        self,
        state: PotentialState,
        cfg: OracleConfig,
        ledger: EnergyLedger | None,
    ) -> int:
        self.resnapshot(state)
        e_start = state.total_energy()
        max_toggles = math.ceil(e_start / ENERGY_DECREASE_FLOOR) + 1
        self.state_io[0] = self.warm
        self.state_io[1] = state.refresh_count
        self.state_io[2] = 0
        self.state_io[3] = max_toggles
        self.out_f[:] = 0.0
        while True:
            before = int(self.state_io[2])
            status, _, ref_n = _fast._balance_fused(
                self.n,
                state.potentials,
                state.gradient,
                self.a_id,
                self.a_tail,
                self.a_head,
                self.a_pair,
                state.approx_weight,
                state.gap_at_refresh,
                self.pair_u,
                self.pair_v,
                self.pair_w,
                self.indptr,
                self.eids,
                self.eto,
                self.ecap,
                self.level,
                self.it,
                self.queue,
                self.path_v,
                self.path_e,
                self.mark,
                self.cut_mask,
                self.state_io,
                state.drift_threshold,
                cfg.alpha,
                cfg.dinkelbach_tol,
                self.ref_ids,
                self.ref_w,
                self.tog_delta,
                self.tog_eta,
                self.tog_usize,
                self.out_f,
            )
            new_toggles = int(self.state_io[2]) - before
            state.refresh_count = int(self.state_io[1])
            if state.weight_listener is not None:
                listener = state.weight_listener
                for i in range(ref_n):
                    listener(int(self.ref_ids[i]), float(self.ref_w[i]))
            if ledger is not None:
                for i in range(new_toggles):
                    ledger.record_toggle(float(self.tog_delta[i]))
            if status == _fast.BALANCED:
                break
            if status == _fast.BUFFER_FULL:
                continue
            if status == _fast.GUARD_TRIPPED:
                raise InvariantViolation(
                    f"balance loop exceeded its certified toggle budget {max_toggles}"
                )
            raise ConvergenceError("min-ratio-cut oracle failed to converge")
        self.warm = int(self.state_io[0])
        self.last_exit_ratio = float(self.out_f[1])
        state.check_horizon()
        return int(self.state_io[2])
