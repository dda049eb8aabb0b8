"""Command line interface: solve, gen, bench, verify.

Exit codes: 0 on success, 1 on bad input, 2 on an invariant breach or a
cross-algorithm disagreement.  The environment variable BALFLOW_SEED
overrides any --seed flag.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .bench import ALGORITHMS, ladder_specs, run_suite
from .dimacs import parse_dimacs, write_dimacs
from .dinic import dinic_maxflow
from .errors import BalflowError, InvariantViolation
from .instances import MODELS, InstanceSpec, generate
from .ratio_cut import OracleConfig
from .solver import RuntimeGuardBreach, SolverConfig, hybrid_solve, solve
from .sparsifier import SparsifierConfig
from . import verify as verify_mod


def _seed_from_env(seed: int) -> int:
    env = os.environ.get("BALFLOW_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"BALFLOW_SEED must be an integer, got {env!r}")
    return seed


def _solver_config(args) -> SolverConfig:
    oracle = OracleConfig(method=args.oracle)
    spars = SparsifierConfig(
        phi=args.phi,
        c=args.sparsifier_c,
        rng_seed=_seed_from_env(args.seed),
    )
    return SolverConfig(
        beta=args.beta,
        horizon=args.M,
        oracle=oracle,
        sparsifier=spars,
        hybrid_rounds=args.hybrid_rounds,
        runtime_guard_factor=args.runtime_guard,
        trace_energy=args.trace_energy,
    )


def _cmd_solve(args) -> int:
    g = parse_dimacs(args.input)
    config = _solver_config(args)
    if args.algo == "dinic":
        result = dinic_maxflow(g)
    elif args.algo == "balanced":
        result = solve(g, config)
    else:
        result = hybrid_solve(g, config)
    summary = sys.stderr if args.trace_energy else sys.stdout
    print(f"value {result.value}", file=summary)
    if args.trace_energy and result.stats.ledger is not None:
        writer = csv.writer(sys.stdout)
        writer.writerow(["event_type", "delta", "total"])
        for kind, delta, total, _bound in result.stats.ledger.events:
            writer.writerow([kind, repr(delta), repr(total)])
    if args.stats_json:
        with open(args.stats_json, "w") as fh:
            json.dump(result.stats.stats_json(result.value), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_gen(args) -> int:
    spec = InstanceSpec(
        model=args.model,
        n=args.n,
        m=args.m,
        seed=_seed_from_env(args.seed),
        layers=args.layers,
        width=args.width,
        reverse_arcs=args.reverse_arcs,
    )
    g = generate(spec)
    write_dimacs(g, args.out)
    print(f"wrote {args.out}: n={g.n} arcs={len(g)} s={g.s + 1} t={g.t + 1}")
    return 0


def _cmd_bench(args) -> int:
    seed = _seed_from_env(args.seed)
    specs = ladder_specs(args.count, seed, max_n=args.max_n, max_m=args.max_m)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    config = SolverConfig(
        sparsifier=SparsifierConfig(rng_seed=seed),
    )
    report = run_suite(specs, algos, out_dir=args.out, config=config)
    print(
        f"{len(report.rows)} rows, {report.disagreements} disagreements",
        file=sys.stderr,
    )
    return 0 if report.ok else 2


def _cmd_verify(args) -> int:
    ok = verify_mod.run_all(seed=_seed_from_env(args.seed), log=sys.stdout)
    return 0 if ok else 2


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=9.0)
    p.add_argument("--M", type=float, default=None, help="energy horizon override")
    p.add_argument(
        "--phi", "--sparsifier-phi", dest="phi", type=float, default=0.1,
        help="expander decomposition conductance target",
    )
    p.add_argument("--sparsifier-c", type=float, default=3.0)
    p.add_argument("--oracle", choices=("brute", "dinkelbach"), default="dinkelbach")
    p.add_argument("--hybrid-rounds", type=int, default=None)
    p.add_argument("--runtime-guard", type=float, default=None)
    p.add_argument("--trace-energy", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="balflow",
        description="Balanced augmenting-path maximum flow on uncapacitated digraphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one DIMACS instance")
    p_solve.add_argument("--algo", choices=ALGORITHMS, default="balanced")
    p_solve.add_argument("--input", required=True)
    p_solve.add_argument("--stats-json", default=None)
    _add_solver_flags(p_solve)
    p_solve.set_defaults(fn=_cmd_solve)

    p_gen = sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--model", choices=MODELS, default="uniform-digraph")
    p_gen.add_argument("--n", type=int, default=10)
    p_gen.add_argument("--m", type=int, default=30)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--layers", type=int, default=3)
    p_gen.add_argument("--width", type=int, default=2)
    p_gen.add_argument("--reverse-arcs", type=int, default=20)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(fn=_cmd_gen)

    p_bench = sub.add_parser("bench", help="run an instance suite across algorithms")
    p_bench.add_argument("--count", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--max-n", type=int, default=60)
    p_bench.add_argument("--max-m", type=int, default=600)
    p_bench.add_argument("--algos", default="dinic,balanced,hybrid")
    p_bench.add_argument("--out", default=None, help="report directory")
    p_bench.set_defaults(fn=_cmd_bench)

    p_verify = sub.add_parser("verify", help="run brute-force invariant checks")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(fn=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InvariantViolation, RuntimeGuardBreach) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 2
    except BalflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
