"""Balanced augmenting-path maximum flow with directed sparsification.

Maximum flow on directed, uncapacitated multigraphs: potentials re-weight the
residual graph so every cut stays approximately balanced, a sampled sparsifier
keeps augmenting-path searches cheap, and blocking-flow rounds provide both a
baseline oracle and a hybrid opening phase.
"""

from .balance import EnergyLedger, PotentialState, stability_bounds, weight_of
from .dimacs import parse_dimacs, write_dimacs
from .dinic import CapacitatedNetwork, blocking_flow_round, capacitated_maxflow, dinic_maxflow
from .errors import BalflowError, ConvergenceError, InputError, InvariantViolation
from .expander import LoopedGraph, Partition, add_self_loops, certify_expander, conductance, decompose, volume
from .graph import (
    Arc,
    DirectedMultigraph,
    ORIGINAL,
    TSLINK,
    add_ts_links,
    extract_flow_paths,
    find_path,
    flip_path,
    in_boundary,
    is_strongly_connected,
    out_boundary,
    scc_restrict,
)
from .instances import InstanceSpec, generate
from .ratio_cut import (
    ENERGY_DECREASE_FLOOR,
    OracleConfig,
    RatioCut,
    balance_loop,
    brute_force_min_ratio_cut,
    dinkelbach_min_ratio_cut,
    min_ratio_cut,
    toggle_cut,
)
from .results import FlowResult, RunStats
from .solver import RuntimeGuardBreach, SolverConfig, SolverHooks, energy_audit, hybrid_solve, solve
from .sparsifier import SparsifierConfig, SparsifierState, bucket_index, sample_level

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "BalflowError",
    "CapacitatedNetwork",
    "ConvergenceError",
    "DirectedMultigraph",
    "ENERGY_DECREASE_FLOOR",
    "EnergyLedger",
    "FlowResult",
    "InputError",
    "InstanceSpec",
    "InvariantViolation",
    "LoopedGraph",
    "ORIGINAL",
    "OracleConfig",
    "Partition",
    "PotentialState",
    "RatioCut",
    "RunStats",
    "RuntimeGuardBreach",
    "SolverConfig",
    "SolverHooks",
    "SparsifierConfig",
    "SparsifierState",
    "TSLINK",
    "add_self_loops",
    "add_ts_links",
    "balance_loop",
    "blocking_flow_round",
    "brute_force_min_ratio_cut",
    "bucket_index",
    "capacitated_maxflow",
    "certify_expander",
    "conductance",
    "decompose",
    "dinic_maxflow",
    "dinkelbach_min_ratio_cut",
    "energy_audit",
    "extract_flow_paths",
    "find_path",
    "flip_path",
    "generate",
    "hybrid_solve",
    "in_boundary",
    "is_strongly_connected",
    "min_ratio_cut",
    "out_boundary",
    "parse_dimacs",
    "sample_level",
    "scc_restrict",
    "solve",
    "stability_bounds",
    "toggle_cut",
    "volume",
    "weight_of",
    "write_dimacs",
]
