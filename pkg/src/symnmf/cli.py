"""Command-line benchmark driver.

Two subcommands:
    generate -- build a synthetic instance and write it as MatrixMarket
    solve    -- factorize a .mtx file or a generated instance, writing a
                per-sweep CSV trace, the factor, and a JSON summary

solve exits 0 when the gap tolerance was met, 2 when the sweep budget ran
out, and 1 on any error (including bad arguments).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import warnings

import numpy as np

from . import metrics, parallel, scheduler, simgen
from .core import SimilarityMatrix, load_matrix_market, save_matrix_market

TRACE_COLUMNS = ("sweep", "elapsed_s", "objective", "rel_residual_pct", "opt_gap", "blocks")


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the solve contract
    # reserves 2 for an exhausted sweep budget, so route errors to 1.
    def error(self, message):
        raise _CliError(message)


def _add_generator_args(p, prefix: str):
    p.add_argument("--%s-method" % prefix, choices=simgen.METHODS)
    p.add_argument("--%s-n" % prefix, type=int)
    p.add_argument("--%s-m" % prefix, type=int, default=None, help="data dimension (default: rank)")
    p.add_argument("--%s-sparsity" % prefix, type=float, default=0.0)
    p.add_argument("--%s-sigma" % prefix, type=float, default=simgen.DEFAULT_NOISE_SIGMA)
    p.add_argument("--%s-knn-k" % prefix, type=int, default=None)
    p.add_argument("--%s-scale-neighbor" % prefix, type=int, default=simgen.DEFAULT_SCALE_NEIGHBOR)
    p.add_argument("--%s-seed" % prefix, type=int, default=0)


def _generator_spec(args, prefix: str, rank: int) -> simgen.GeneratorSpec:
    get = lambda name: getattr(args, ("%s_%s" % (prefix, name)).replace("-", "_"))
    if get("method") is None or get("n") is None:
        raise _CliError("--%s-method and --%s-n are required" % (prefix, prefix))
    return simgen.GeneratorSpec(
        method=get("method"),
        n=get("n"),
        r=rank,
        m=get("m"),
        sparsity=get("sparsity"),
        noise_sigma=get("sigma"),
        knn_k=get("knn_k"),
        scale_neighbor=get("scale_neighbor"),
        rng_seed=get("seed"),
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="symnmf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic instance to a .mtx file")
    _add_generator_args(gen, "gen")
    gen.add_argument("--rank", type=int, default=4, help="fallback data dimension when --gen-m is omitted")
    gen.add_argument("--out", required=True, help="output .mtx path")

    sol = sub.add_parser("solve", help="factorize an instance")
    sol.add_argument("--input", help=".mtx matrix to load (or use --gen-*)")
    _add_generator_args(sol, "gen")
    sol.add_argument("--engine", choices=scheduler.ENGINES, default="vbsum")
    sol.add_argument("--policy", choices=scheduler.POLICY_KINDS, default="cyclic")
    sol.add_argument("--rank", type=int, required=True)
    sol.add_argument("--imax", type=int, default=10, help="inner steps per row visit (vbsum)")
    sol.add_argument("--max-sweeps", type=int, default=scheduler.DEFAULT_MAX_SWEEPS)
    sol.add_argument("--gap-tol", type=float, default=scheduler.DEFAULT_GAP_TOL)
    sol.add_argument("--seed", type=int, default=0, help="seed for ordering and the initial factor")
    sol.add_argument("--workers", type=int, default=0, help="> 0 switches to the parallel driver")
    sol.add_argument("--blocks-per-round", type=int, default=None, help="blocks per worker per round")
    sol.add_argument("--stepsize", type=float, default=1.0, help="parallel merge stepsize gamma0")
    sol.add_argument("--stepsize-decay", choices=parallel.STEPSIZE_KINDS, default="constant")
    sol.add_argument("--out", required=True, help="output prefix for trace/factor/summary files")
    return parser


def _cmd_generate(args) -> int:
    spec = _generator_spec(args, "gen", args.rank)
    M = simgen.generate(spec)
    save_matrix_market(args.out, M)
    print("wrote %s (n=%d, nnz=%d, %s)" % (args.out, M.n, M.nnz, "csr" if M.is_sparse else "dense"))
    return 0


def _load_instance(args) -> SimilarityMatrix:
    if args.input is not None and args.gen_method is not None:
        raise _CliError("--input and --gen-* are mutually exclusive")
    if args.input is not None:
        if not os.path.exists(args.input):
            raise _CliError("no such input file: %s" % args.input)
        return load_matrix_market(args.input)
    if args.gen_method is None:
        raise _CliError("either --input or --gen-method/--gen-n is required")
    return simgen.generate(_generator_spec(args, "gen", args.rank))


def _write_outputs(prefix: str, result, M, wall_time: float, args) -> None:
    with open(prefix + "_trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec in result.trace:
            w.writerow([
                rec.sweep_index,
                repr(rec.elapsed_seconds),
                repr(rec.objective),
                repr(rec.relative_residual),
                repr(rec.optimality_gap),
                rec.blocks_updated,
            ])
    np.savetxt(prefix + "_factor.csv", result.X, delimiter=",")
    summary = {
        "engine": args.engine,
        "policy": args.policy,
        "n": M.n,
        "rank": args.rank,
        "seed": args.seed,
        "workers": args.workers,
        "sweeps": len(result.trace),
        "converged": result.converged,
        "exit_reason": result.reason,
        "final_objective": metrics.objective(M, result.X),
        "final_opt_gap": metrics.optimality_gap(M, result.X),
        "final_rel_residual_pct": metrics.relative_residual_percent(M, result.X),
        "wall_time_s": wall_time,
    }
    with open(prefix + "_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_solve(args) -> int:
    M = _load_instance(args)
    if args.rank > M.n:
        warnings.warn("rank %d exceeds n=%d; continuing anyway" % (args.rank, M.n))
    X0 = simgen.initialize(M, args.rank, seed=args.seed)
    t0 = time.perf_counter()
    if args.workers > 0:
        config = parallel.ParallelConfig(
            engine=args.engine,
            workers=args.workers,
            blocks_per_worker=args.blocks_per_round,
            selection="random" if args.policy == "permute" else "cyclic",
            stepsize=parallel.StepsizeRule(kind=args.stepsize_decay, gamma0=args.stepsize),
            inner_steps=args.imax,
            max_rounds=args.max_sweeps,
            gap_tol=args.gap_tol,
            seed=args.seed,
        )
        result = parallel.run_parallel(M, X0, config)
    else:
        config = scheduler.SolverConfig(
            engine=args.engine,
            policy=scheduler.BlockOrderPolicy(kind=args.policy, seed=args.seed),
            inner_steps=args.imax,
            max_sweeps=args.max_sweeps,
            gap_tol=args.gap_tol,
        )
        result = scheduler.run_solver(M, X0, config)
    wall_time = time.perf_counter() - t0
    _write_outputs(args.out, result, M, wall_time, args)
    print("%s: %s after %d sweeps (objective %.6g, gap %.3g)" % (
        args.out, result.reason, len(result.trace),
        metrics.objective(M, result.X), metrics.optimality_gap(M, result.X)))
    return 0 if result.converged and result.reason == "gap_tol" else 2


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "generate":
            return _cmd_generate(args)
        return _cmd_solve(args)
    except _CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI contract maps any failure to 1
        print("error: %s" % exc, file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
