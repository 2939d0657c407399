"""Symmetric nonnegative matrix factorization by block successive
upper-bound minimization, with entry-block and row-block engines, serial
and shared-memory parallel drivers, instance generators, and a benchmark
CLI."""

from .core import (
    GramCache,
    SimilarityMatrix,
    TraceRecord,
    as_factor,
    load_matrix_market,
    save_matrix_market,
)
from .cubic import CubicCoefficients, signed_cbrt, solve_depressed_cubic, solve_entry_surrogate
from .metrics import (
    StationarityReport,
    curvature_along_iterate,
    curvature_reference_bound,
    gradient,
    objective,
    optimality_gap,
    relative_residual_percent,
    stationarity_report,
)
from .parallel import (
    ParallelConfig,
    ParallelResult,
    PartitionPlan,
    StepsizeRule,
    parallel_round,
    plan_partition,
    run_parallel,
)
from .sbsum import EntryUpdateContext, compute_entry_coefficients, sweep_sbsum, update_entry
from .scheduler import BlockOrderPolicy, SolveResult, SolverConfig, next_order, run_solver
from .simgen import GeneratorSpec, generate, generate_ck, generate_sgk, initialize
from .vbsum import RowSubproblem, build_row_subproblem, inner_step, sweep_vbsum, update_row

__version__ = "0.1.0"

__all__ = [
    "BlockOrderPolicy",
    "CubicCoefficients",
    "EntryUpdateContext",
    "GeneratorSpec",
    "GramCache",
    "ParallelConfig",
    "ParallelResult",
    "PartitionPlan",
    "RowSubproblem",
    "SimilarityMatrix",
    "SolveResult",
    "SolverConfig",
    "StationarityReport",
    "StepsizeRule",
    "TraceRecord",
    "as_factor",
    "build_row_subproblem",
    "compute_entry_coefficients",
    "curvature_along_iterate",
    "curvature_reference_bound",
    "generate",
    "generate_ck",
    "generate_sgk",
    "gradient",
    "initialize",
    "inner_step",
    "load_matrix_market",
    "next_order",
    "objective",
    "optimality_gap",
    "parallel_round",
    "plan_partition",
    "relative_residual_percent",
    "run_parallel",
    "run_solver",
    "save_matrix_market",
    "signed_cbrt",
    "solve_depressed_cubic",
    "solve_entry_surrogate",
    "stationarity_report",
    "sweep_sbsum",
    "sweep_vbsum",
    "update_entry",
    "update_row",
]
