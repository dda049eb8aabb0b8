"""The balanced-augmenting-paths maximum-flow solver and the hybrid pipeline.

One iteration: rebalance the residual graph's weights (toggle loop), sample a
sparsifier of the re-weighted graph, find an augmenting path in the sample
(falling back to the full graph on the rare sampling miss), flip the path and
propagate the weight changes.  Terminates with a maximality certificate: no
s-t path left in the full residual graph.

The hybrid pipeline prepends blocking-flow rounds to shrink the remaining
flow value before switching to the balanced loop with fresh potentials.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _fast
from .balance import EnergyLedger, PotentialState, flip_energy_delta
from .dinic import blocking_flow_round
from .errors import BalflowError, InputError
from .graph import (
    DirectedMultigraph,
    add_ts_links,
    extract_flow_paths,
    find_path,
    flip_path,
    scc_restrict,
)
from .ratio_cut import BalanceRuntime, OracleConfig, balance_loop
from .results import FlowResult, RunStats
from .sparsifier import SparsifierConfig, SparsifierState


class RuntimeGuardBreach(BalflowError):
    """The optional work-budget diagnostic fired; carries partial stats."""

    def __init__(self, message: str, result: FlowResult):
        super().__init__(message)
        self.result = result


@dataclass
class SolverHooks:
    """Optional instrumentation points used by the verification suites."""

    after_balance: Callable | None = None  # (state, graph, toggles)
    after_augment: Callable | None = None  # (state, graph, path_arcs)
    on_sample: Callable | None = None  # (graph, sample_ids, used_fallback)


@dataclass
class SolverConfig:
    beta: float = 9.0
    horizon: float | None = None  # energy horizon M; defaults to n**4
    oracle: OracleConfig = field(default_factory=OracleConfig)
    sparsifier: SparsifierConfig = field(default_factory=SparsifierConfig)
    hybrid_rounds: int | None = None  # None: ceil(sqrt(n)) when hybrid
    runtime_guard_factor: float | None = None
    trace_energy: bool = False
    use_fused_loop: bool = True

    def __post_init__(self):
        if self.beta < 1.0:
            raise InputError("beta must be at least 1")


def solve(
    g_raw: DirectedMultigraph,
    config: SolverConfig | None = None,
    hooks: SolverHooks | None = None,
) -> FlowResult:
    """Maximum flow by balanced sparsified augmenting paths."""
    return _pipeline(g_raw, config or SolverConfig(), hooks, blocking_rounds=0)


def hybrid_solve(
    g_raw: DirectedMultigraph,
    config: SolverConfig | None = None,
    hooks: SolverHooks | None = None,
) -> FlowResult:
    """Blocking-flow opening rounds, then the balanced loop on the residual."""
    return _pipeline(g_raw, config or SolverConfig(), hooks, blocking_rounds=None)


def _preprocess(g_raw: DirectedMultigraph) -> DirectedMultigraph | None:
    if g_raw.s == g_raw.t:
        raise InputError("source and sink coincide")
    if len(g_raw) == 0:
        return None
    linked = add_ts_links(g_raw)
    return scc_restrict(linked)


def _pipeline(
    g_raw: DirectedMultigraph,
    config: SolverConfig,
    hooks: SolverHooks | None,
    blocking_rounds: int | None,
) -> FlowResult:
    t_start = time.perf_counter()
    stats = RunStats()
    g = _preprocess(g_raw)
    if g is None:
        stats.wall_time_s = time.perf_counter() - t_start
        return FlowResult(value=0, paths=[], stats=stats)
    stats.preprocessed_n = g.n
    stats.preprocessed_m = len(g)

    if blocking_rounds is None:
        rounds = (
            config.hybrid_rounds
            if config.hybrid_rounds is not None
            else math.ceil(math.sqrt(g.n))
        )
    else:
        rounds = blocking_rounds
    for _ in range(rounds):
        found = blocking_flow_round(g)
        if found == 0:
            break
        stats.blocking_rounds += 1
        stats.augmentations += found
    stats.blocking_flow_value = g.flow_value

    _balanced_phase(g, config, hooks, stats)

    paths = extract_flow_paths(g)
    if len(paths) != g.flow_value:
        raise BalflowError(
            f"decomposed {len(paths)} paths for a flow of value {g.flow_value}"
        )
    labels = g.vertex_labels
    stats.wall_time_s = time.perf_counter() - t_start
    return FlowResult(
        value=g.flow_value,
        paths=[[int(labels[v]) for v in p] for p in paths],
        stats=stats,
    )


def _balanced_phase(
    g: DirectedMultigraph,
    config: SolverConfig,
    hooks: SolverHooks | None,
    stats: RunStats,
) -> EnergyLedger:
    """Run the balanced augmenting loop to maximality on the residual ``g``.

    Potentials start fresh (identically zero, all approximate weights 1) over
    the current residual orientation.
    """
    horizon = config.horizon if config.horizon is not None else float(g.n) ** 4
    state = PotentialState(g, horizon=horizon, alpha=config.oracle.alpha)
    spars = SparsifierState(g, config.sparsifier)
    for arc_id in g.live_arc_ids():
        spars.insert_arc(int(arc_id), 1.0)
    state.weight_listener = spars.change_weight

    ledger = EnergyLedger(total=state.total_energy())
    stats.energy_initial = ledger.total
    runtime = None
    if (
        config.use_fused_loop
        and _fast.HAVE_NUMBA
        and config.oracle.method == "dinkelbach"
    ):
        runtime = BalanceRuntime(state)

    m_budget = len(g)
    ln_m1 = math.log(horizon + 1.0)
    while True:
        full_path = find_path(g, forbid_ts=True)
        if full_path is None:
            break
        toggles = balance_loop(state, config.oracle, ledger=ledger, runtime=runtime)
        stats.toggle_calls += toggles
        if hooks and hooks.after_balance:
            hooks.after_balance(state, g, toggles)

        sample = spars.sparsify(config.beta)
        stats.sparsifier_queries += 1
        path = find_path(g, forbid_ts=True, restrict_to=sample)
        fallback = path is None
        if fallback:
            stats.sparsifier_fallbacks += 1
            path = full_path
        if hooks and hooks.on_sample:
            hooks.on_sample(g, sample, fallback)

        bound = (
            float(state.potentials[g.t] - state.potentials[g.s])
            + (g.n - 1) * ln_m1
        )
        delta = 0.0
        for arc_id in path:
            delta += flip_energy_delta(state.potential_gap(arc_id), horizon)
        flip_path(g, path)
        for arc_id in path:
            state.on_arc_flipped(arc_id)
        ledger.record_augment(delta, bound)
        stats.augmentations += 1
        if hooks and hooks.after_augment:
            hooks.after_augment(state, g, path)

        if config.runtime_guard_factor is not None:
            work = stats.toggle_calls + g.n * stats.augmentations
            budget = config.runtime_guard_factor * (m_budget + g.n * g.flow_value)
            if work > budget:
                stats.energy_final = state.total_energy()
                raise RuntimeGuardBreach(
                    f"work {work} exceeded the configured budget {budget}",
                    FlowResult(value=g.flow_value, paths=[], stats=stats),
                )

    stats.energy_final = state.total_energy()
    stats.refreshes = state.refresh_count
    ledger_scale = max(1.0, abs(ledger.total), abs(stats.energy_final))
    if abs(ledger.total - stats.energy_final) > 1e-6 * ledger_scale:
        raise BalflowError(
            f"energy ledger total {ledger.total} drifted from the recomputed "
            f"total {stats.energy_final}"
        )
    # the (t, s) links must store enough energy to pay for the terminal gap
    from .graph import TSLINK

    ts_count = int((g.tags[g.live_arc_ids()] == TSLINK).sum())
    terminal_gap = float(state.potentials[g.t] - state.potentials[g.s])
    if ts_count and terminal_gap >= 0.0:
        if terminal_gap * ts_count > stats.energy_final + 1e-9:
            raise BalflowError(
                f"terminal potential gap {terminal_gap} exceeds the energy "
                f"budget across {ts_count} links"
            )
    stats.ledger = ledger
    return ledger


def energy_audit(state: PotentialState | None, ledger: EnergyLedger) -> dict:
    """Check every recorded energy event against its per-event bound.

    Toggles must strictly decrease the total, and by at least the certified
    floor when the exact oracle ran; augmentations must respect the
    potential-gap plus log-horizon bound recorded at flip time.  With a live
    ``state``, also checks that the (t, s) links store enough energy to pay
    for the current terminal potential gap, and that the ledger total agrees
    with a from-scratch recomputation.  A clean run has empty ``violations``.
    """
    from .ratio_cut import ENERGY_DECREASE_FLOOR

    violations: list[str] = []
    for kind, delta, _total, bound in ledger.events:
        if kind == "toggle":
            if not delta < 0.0:
                violations.append(f"toggle delta {delta} is not negative")
            elif delta > -ENERGY_DECREASE_FLOOR + 1e-12:
                violations.append(
                    f"toggle delta {delta} above the certified floor "
                    f"-{ENERGY_DECREASE_FLOOR}"
                )
        else:
            if delta > bound + 1e-6:
                violations.append(
                    f"augmentation delta {delta} exceeds its bound {bound}"
                )
    if state is not None:
        from .graph import TSLINK

        g = state.graph
        total = state.total_energy()
        scale = max(1.0, abs(total), abs(ledger.total))
        if abs(total - ledger.total) > 1e-6 * scale:
            violations.append(
                f"ledger total {ledger.total} disagrees with recomputation {total}"
            )
        ts_count = int((g.tags[g.live_arc_ids()] == TSLINK).sum())
        y_gap = float(state.potentials[g.t] - state.potentials[g.s])
        if ts_count and y_gap >= 0.0 and y_gap * ts_count > total + 1e-9:
            violations.append(
                f"terminal gap {y_gap} not covered by total energy {total} "
                f"across {ts_count} links"
            )
    return {
        "toggles": len(ledger.toggle_deltas),
        "augmentations": len(ledger.augment_deltas),
        "violations": violations,
        "max_toggle_delta": max(ledger.toggle_deltas, default=math.nan),
        "final_total": ledger.total,
    }
