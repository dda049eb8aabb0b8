"""Experiment runner: solve instance suites and emit machine-readable reports.

Reports are deterministic under fixed seeds: rows carry no wall-clock data
(timings go to stderr), so a rerun produces byte-identical JSON and CSV.
"""

from __future__ import annotations

import csv
import math
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .dinic import dinic_maxflow
from .errors import InputError
from .instances import InstanceSpec, generate
from .results import FlowResult
from .solver import SolverConfig, hybrid_solve, solve

SCHEMA_VERSION = 1

ALGORITHMS = ("dinic", "balanced", "hybrid")


@dataclass
class SuiteReport:
    rows: list[dict] = field(default_factory=list)
    disagreements: int = 0

    @property
    def ok(self) -> bool:
        return self.disagreements == 0


def run_algorithm(algo: str, spec: InstanceSpec, config: SolverConfig) -> FlowResult:
    g = generate(spec)
    if algo == "dinic":
        return dinic_maxflow(g)
    if algo == "balanced":
        return solve(g, config)
    if algo == "hybrid":
        return hybrid_solve(g, config)
    raise InputError(f"unknown algorithm {algo!r}")


def run_suite(
    specs: list[InstanceSpec],
    algos: list[str],
    out_dir: str | Path | None = None,
    config: SolverConfig | None = None,
    log=sys.stderr,
) -> SuiteReport:
    """Run every (instance, algorithm) pair and cross-check the flow values."""
    for algo in algos:
        if algo not in ALGORITHMS:
            raise InputError(f"unknown algorithm {algo!r}")
    config = config or SolverConfig()
    report = SuiteReport()
    for spec in specs:
        values: dict[str, int] = {}
        rows_here: list[dict] = []
        t0 = time.perf_counter()
        for algo in algos:
            res = run_algorithm(algo, spec, config)
            values[algo] = res.value
            rows_here.append(
                {
                    "schema_version": SCHEMA_VERSION,
                    "instance": spec.label(),
                    "model": spec.model,
                    "n": spec.n,
                    "m": spec.m,
                    "seed": spec.seed,
                    "algo": algo,
                    "value": res.value,
                    "augmentations": res.stats.augmentations,
                    "toggle_calls": res.stats.toggle_calls,
                    "sparsifier_fallbacks": res.stats.sparsifier_fallbacks,
                    "energy_initial": res.stats.energy_initial,
                    "energy_final": res.stats.energy_final,
                    "agree": True,
                }
            )
        agree = len(set(values.values())) <= 1
        if not agree:
            report.disagreements += 1
            for row in rows_here:
                row["agree"] = False
        report.rows.extend(rows_here)
        if log is not None:
            elapsed = time.perf_counter() - t0
            print(
                f"[bench] {spec.label()}: "
                + " ".join(f"{a}={values[a]}" for a in algos)
                + f" ({elapsed:.2f}s)"
                + ("" if agree else "  ** DISAGREE **"),
                file=log,
            )
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def write_report(report: SuiteReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    csv_path = out / "report.csv"
    payload = {
        "schema_version": SCHEMA_VERSION,
        "disagreements": report.disagreements,
        "rows": report.rows,
    }
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    fieldnames = [
        "schema_version",
        "instance",
        "model",
        "n",
        "m",
        "seed",
        "algo",
        "value",
        "augmentations",
        "toggle_calls",
        "sparsifier_fallbacks",
        "energy_initial",
        "energy_final",
        "agree",
    ]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(report.rows)
    return json_path, csv_path


def ladder_specs(
    count: int,
    seed: int,
    max_n: int = 60,
    max_m: int = 600,
) -> list[InstanceSpec]:
    """A reproducible mix of the four generator models under the size caps.

    Sizes are skewed toward small instances with a handful at the caps, so a
    suite stays minutes-cheap while still touching the configured maxima.
    """
    import numpy as np

    if max_n < 4:
        raise InputError("max_n must be at least 4")
    if max_m < 2:
        raise InputError("max_m must be at least 2")
    rng = np.random.default_rng(seed)
    specs: list[InstanceSpec] = []
    models = list(GENERATOR_MODELS)
    tiers = ((0.55, 4, 13), (0.85, 10, 26), (0.98, 20, 41), (2.0, 40, 61))
    for i in range(count):
        model = models[i % len(models)]
        u = rng.random()
        for cutoff, lo, hi in tiers:
            if u < cutoff:
                break
        lo = min(lo, max_n)
        hi = min(hi, max_n + 1)
        n = int(rng.integers(lo, max(lo + 1, hi)))
        if model == "two-cliques-bridge":
            # two bidirected cliques emit 2*h*(h-1)+1 arcs; keep under max_m
            h_cap = max(2, int((1.0 + math.sqrt(1.0 + 2.0 * (max_m - 1))) / 2.0))
            n = min(n, 2 * h_cap)
        m_cap = min(max_m, n * (n - 1))
        m_lo = min(max(1, n // 2), m_cap)
        m = int(rng.integers(m_lo, max(m_lo + 1, m_cap // 2 + 1)))
        spec = InstanceSpec(model=model, n=n, m=m, seed=int(rng.integers(2**31)))
        if model == "layered":
            spec.layers = int(rng.integers(1, 4))
            spec.width = int(rng.integers(1, max(2, n // 3)))
        elif model == "unbalanced-cut":
            spec.n = max(4, n)
            half = spec.n // 2
            spec.reverse_arcs = int(rng.integers(1, max(2, half * (spec.n - half) // 2)))
        specs.append(spec)
    return specs


GENERATOR_MODELS = (
    "uniform-digraph",
    "layered",
    "two-cliques-bridge",
    "unbalanced-cut",
)
