"""Result and statistics containers shared by the solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class RunStats:
    """Counters and energy figures collected over one solver run."""

    augmentations: int = 0
    toggle_calls: int = 0
    refreshes: int = 0
    sparsifier_fallbacks: int = 0
    sparsifier_queries: int = 0
    blocking_rounds: int = 0
    blocking_flow_value: int = 0
    energy_initial: float = 0.0
    energy_final: float = 0.0
    wall_time_s: float = 0.0
    preprocessed_n: int = 0
    preprocessed_m: int = 0
    ledger: Any = field(default=None, repr=False)  # EnergyLedger of the run

    def stats_json(self, value: int) -> dict:
        """Row in the externally documented stats schema."""
        return {
            "value": value,
            "augmentations": self.augmentations,
            "toggle_calls": self.toggle_calls,
            "sparsifier_fallbacks": self.sparsifier_fallbacks,
            "energy_initial": self.energy_initial,
            "energy_final": self.energy_final,
            "wall_ms": self.wall_time_s * 1000.0,
        }


@dataclass
class FlowResult:
    """Flow value, an arc-disjoint path decomposition, and run counters.

    ``paths`` hold vertex ids in the caller's original numbering and original
    arc orientation; ``value == len(paths)`` always holds.
    """

    value: int
    paths: list[list[int]] = field(default_factory=list)
    stats: RunStats = field(default_factory=RunStats)
