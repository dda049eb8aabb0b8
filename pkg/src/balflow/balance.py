"""Vertex potentials, balancing weights, gradient and energy accounting.

A potential vector over the vertices induces a weight in (0, 1] on every arc:
the weight is 1 whenever the arc points "downhill" (head potential at most
the tail's) and decays as 1/(gap+1) uphill.  The gradient encodes effective
arc directions on the undirected image of the graph; the drift protocol keeps
a cheap approximation of the weights that is refreshed only when the weighted
potential gap has moved by the detection threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, InvariantViolation
from .graph import DirectedMultigraph

GRADIENT_REBUILD_PERIOD = 1 << 14


def weight_of(gap: float) -> float:
    """Weight 1/(max(gap, 0) + 1) of an arc with the given potential gap."""
    if not math.isfinite(gap):
        raise InputError("potential gap must be finite")
    return 1.0 / (max(gap, 0.0) + 1.0)


def stability_bounds(w1: float, delta: float) -> tuple[float, float]:
    """Interval containing every weight whose gap moved by at most delta/w1."""
    if not 0.0 <= delta < 1.0:
        raise InputError("delta must lie in [0, 1)")
    if not 0.0 < w1 <= 1.0:
        raise InputError("w1 must lie in (0, 1]")
    return w1 / (1.0 + delta), w1 / (1.0 - delta)


@dataclass
class EnergyLedger:
    """Running energy total plus the per-event deltas behind it."""

    total: float = 0.0
    toggle_deltas: list[float] = field(default_factory=list)
    augment_deltas: list[float] = field(default_factory=list)
    # (kind, delta, total_after, bound) rows; bound is NaN for toggles
    events: list[tuple[str, float, float, float]] = field(default_factory=list)

    def record_toggle(self, delta: float) -> None:
        self.total += delta
        self.toggle_deltas.append(delta)
        self.events.append(("toggle", delta, self.total, math.nan))

    def record_augment(self, delta: float, bound: float) -> None:
        self.total += delta
        self.augment_deltas.append(delta)
        self.events.append(("augment", delta, self.total, bound))


class PotentialState:
    """Potentials, approximate weights and gradient for one solver run.

    ``approx_weight[a]`` is exactly ``1/(max(gap_at_refresh[a], 0) + 1)`` for
    every live arc, where ``gap_at_refresh`` is the potential gap recorded the
    last time the arc was inserted or refreshed.  The gradient is maintained
    from the approximate weights.  ``weight_listener`` (if set) is told about
    every approximate-weight change so the sparsifier can mirror it.
    """

    def __init__(
        self,
        graph: DirectedMultigraph,
        horizon: float,
        alpha: float = 1.0,
    ):
        if alpha < 1.0:
            raise InputError("alpha must be at least 1")
        if horizon < graph.n:
            raise InputError("energy horizon must be at least the vertex count")
        self.graph = graph
        self.horizon = float(horizon)
        self.alpha = float(alpha)
        self.drift_threshold = 1.0 / (8.0 * alpha)
        self.potentials = np.zeros(graph.n, dtype=np.float64)
        self.gradient = np.zeros(graph.n, dtype=np.float64)
        slots = graph.num_arc_slots
        self.approx_weight = np.zeros(slots, dtype=np.float64)
        self.gap_at_refresh = np.zeros(slots, dtype=np.float64)
        self.weight_listener: Callable[[int, float], None] | None = None
        self.refresh_count = 0
        ids = graph.live_arc_ids()
        self.approx_weight[ids] = 1.0  # gap is 0 everywhere at y == 0
        self.rebuild_gradient()

    # -- accessors ---------------------------------------------------------

    def potential_gap(self, arc_id: int) -> float:
        """Current potential difference head minus tail, effective orientation."""
        a = self.graph.arc(arc_id)
        return float(self.potentials[a.eff_head] - self.potentials[a.eff_tail])

    def live_gaps(self, ids: np.ndarray) -> np.ndarray:
        g = self.graph
        eff_tail = np.where(g.flipped[ids], g.heads[ids], g.tails[ids])
        eff_head = np.where(g.flipped[ids], g.tails[ids], g.heads[ids])
        return self.potentials[eff_head] - self.potentials[eff_tail]

    @property
    def weight_range_bound(self) -> float:
        """U such that every approximate weight lies in [1/U, U]."""
        ids = self.graph.live_arc_ids()
        if ids.size == 0:
            return 1.0
        return max(1.0, 1.0 / float(self.approx_weight[ids].min()))

    # -- gradient ----------------------------------------------------------

    def rebuild_gradient(self) -> None:
        """Recompute the gradient from scratch to cap float drift."""
        g = self.graph
        ids = g.live_arc_ids()
        self.gradient[:] = 0.0
        if ids.size:
            eff_tail = np.where(g.flipped[ids], g.heads[ids], g.tails[ids])
            eff_head = np.where(g.flipped[ids], g.tails[ids], g.heads[ids])
            np.add.at(self.gradient, eff_tail, self.approx_weight[ids])
            np.subtract.at(self.gradient, eff_head, self.approx_weight[ids])

    def gradient_cut_value(self, members) -> float:
        """Sum of the gradient over a vertex set (0 for the full set: g sums to 0)."""
        idx = np.asarray(list(members))
        if idx.size == 0:
            raise InputError("cut side must be nonempty")
        return float(self.gradient[idx].sum())

    # -- drift protocol ----------------------------------------------------

    def refresh_arc(self, arc_id: int) -> None:
        """Re-anchor one arc's approximate weight at the current potentials."""
        g = self.graph
        if not g.alive[arc_id]:
            raise InvariantViolation(f"refresh of dead arc {arc_id}")
        a = g.arc(arc_id)
        gap = float(self.potentials[a.eff_head] - self.potentials[a.eff_tail])
        w_old = float(self.approx_weight[arc_id])
        w_new = weight_of(gap)
        # remove the old contribution, add the new one
        self.gradient[a.eff_tail] += w_new - w_old
        self.gradient[a.eff_head] -= w_new - w_old
        self.approx_weight[arc_id] = w_new
        self.gap_at_refresh[arc_id] = gap
        self.refresh_count += 1
        if self.weight_listener is not None:
            self.weight_listener(arc_id, w_new)
        if self.refresh_count % GRADIENT_REBUILD_PERIOD == 0:
            self.rebuild_gradient()

    def drifted_arcs(self) -> np.ndarray:
        """Live arcs whose weighted gap moved by at least the threshold."""
        ids = self.graph.live_arc_ids()
        if ids.size == 0:
            return ids
        drift = self.approx_weight[ids] * np.abs(
            self.live_gaps(ids) - self.gap_at_refresh[ids]
        )
        return ids[drift >= self.drift_threshold]

    def on_arc_flipped(self, arc_id: int) -> None:
        """Rebook an arc that was just flipped: delete old side, insert new.

        Must be called after the graph flip; the pre-flip orientation is the
        reverse of the current one.
        """
        g = self.graph
        a = g.arc(arc_id)
        new_tail, new_head = a.eff_tail, a.eff_head
        w_old = float(self.approx_weight[arc_id])
        # old orientation was (new_head -> new_tail)
        self.gradient[new_head] -= w_old
        self.gradient[new_tail] += w_old
        gap = float(self.potentials[new_head] - self.potentials[new_tail])
        w_new = weight_of(gap)
        self.gradient[new_tail] += w_new
        self.gradient[new_head] -= w_new
        self.approx_weight[arc_id] = w_new
        self.gap_at_refresh[arc_id] = gap
        if self.weight_listener is not None:
            self.weight_listener(arc_id, w_new)

    # -- energy ------------------------------------------------------------

    def arc_energy(self, arc_id: int) -> float:
        """Energy of one arc: integral of the weight curve from gap to horizon."""
        gap = self.potential_gap(arc_id)
        return self._energy_of_gap(gap)

    def _energy_of_gap(self, gap: float) -> float:
        m1 = self.horizon + 1.0
        if gap > self.horizon:
            raise InvariantViolation(
                f"potential gap {gap} exceeds the energy horizon {self.horizon}"
            )
        if gap >= 0.0:
            return math.log(m1) - math.log(gap + 1.0)
        return math.log(m1) - gap

    def total_energy(self) -> float:
        """Energy summed over all live arcs, (t, s) links included."""
        ids = self.graph.live_arc_ids()
        if ids.size == 0:
            return 0.0
        gaps = self.live_gaps(ids)
        if float(gaps.max()) > self.horizon:
            raise InvariantViolation("a potential gap exceeds the energy horizon")
        m1 = math.log(self.horizon + 1.0)
        return float(
            np.where(gaps >= 0.0, m1 - np.log1p(np.maximum(gaps, 0.0)), m1 - gaps).sum()
        )

    def check_horizon(self) -> None:
        """Assert max potential spread stays within the horizon."""
        spread = float(self.potentials.max() - self.potentials.min())
        if spread > self.horizon:
            raise InvariantViolation(
                f"potential spread {spread} exceeds horizon {self.horizon}; "
                "the configured M is undersized or an invariant broke"
            )

    # -- audits --------------------------------------------------------------

    def gradient_residual(self) -> float:
        """Absolute deviation of the gradient from summing to zero."""
        return abs(float(self.gradient.sum()))

    def sandwich_violations(self) -> np.ndarray:
        """Arcs violating approx/(1+eps) <= true weight <= approx/(1-eps)."""
        ids = self.graph.live_arc_ids()
        if ids.size == 0:
            return ids
        gaps = self.live_gaps(ids)
        true_w = 1.0 / (np.maximum(gaps, 0.0) + 1.0)
        eps = self.drift_threshold
        lo = self.approx_weight[ids] / (1.0 + eps)
        hi = self.approx_weight[ids] / (1.0 - eps)
        bad = (true_w < lo - 1e-12) | (true_w > hi + 1e-12)
        return ids[bad]


def flip_energy_delta(gap: float, horizon: float) -> float:
    """Exact energy change of flipping one arc whose current gap is ``gap``."""
    if abs(gap) > horizon:
        raise InvariantViolation("gap outside the energy horizon")
    if gap >= 0.0:
        return gap + math.log1p(gap)
    return gap - math.log1p(-gap)
