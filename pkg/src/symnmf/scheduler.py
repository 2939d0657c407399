"""Sweep scheduling: block orders, stopping rules, and the serial driver.

The permuted policy draws a fresh uniform permutation per sweep from a
counter-based generator keyed on (seed, sweep_index), so any sweep's order
can be regenerated without replaying the ones before it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics, sbsum, vbsum
from .core import GramCache, SimilarityMatrix, TraceRecord, as_factor

POLICY_KINDS = ("cyclic", "permute")
ENGINES = ("sbsum", "vbsum")

DEFAULT_MAX_SWEEPS = 1000
DEFAULT_GAP_TOL = 1e-4
DEFAULT_REFRESH_PERIOD = 50


@dataclass(frozen=True)
class BlockOrderPolicy:
    """Either the fixed cyclic order or a per-sweep random permutation."""

    kind: str = "cyclic"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError("unknown policy %r; expected one of %r" % (self.kind, POLICY_KINDS))


def next_order(policy: BlockOrderPolicy, m: int, sweep_index: int) -> np.ndarray:
    """Block visiting order for one sweep: a permutation of range(m)."""
    if m < 1:
        raise ValueError("need at least one block")
    if sweep_index < 0:
        raise ValueError("sweep_index must be nonnegative")
    if policy.kind == "cyclic":
        return np.arange(m, dtype=np.int64)
    seq = np.random.SeedSequence(entropy=int(policy.seed), spawn_key=(int(sweep_index),))
    rng = np.random.Generator(np.random.Philox(seq))
    return rng.permutation(m).astype(np.int64)


@dataclass
class SolverConfig:
    engine: str = "vbsum"
    policy: BlockOrderPolicy = field(default_factory=BlockOrderPolicy)
    inner_steps: int = vbsum.DEFAULT_INNER_STEPS
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    gap_tol: float = DEFAULT_GAP_TOL
    rel_obj_tol: float = 0.0  # 0 disables the objective-stall rule
    refresh_period: int = DEFAULT_REFRESH_PERIOD

    def validate(self):
        if self.engine not in ENGINES:
            raise ValueError("unknown engine %r; expected one of %r" % (self.engine, ENGINES))
        if self.policy.kind not in POLICY_KINDS:
            raise ValueError("unknown policy %r" % self.policy.kind)
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be >= 1")
        if self.max_sweeps < 0:
            raise ValueError("max_sweeps must be >= 0")
        if self.gap_tol < 0 or self.rel_obj_tol < 0:
            raise ValueError("tolerances must be >= 0")
        if self.refresh_period < 1:
            raise ValueError("refresh_period must be >= 1")


@dataclass
class SolveResult:
    X: np.ndarray
    trace: list[TraceRecord]
    converged: bool
    reason: str  # "gap_tol" | "rel_obj_tol" | "max_sweeps"


def _record(M, X, sweep_index, blocks, t0) -> TraceRecord:
    obj = metrics.objective(M, X)
    return TraceRecord(
        sweep_index=sweep_index,
        elapsed_seconds=time.perf_counter() - t0,
        objective=obj,
        relative_residual=100.0 * float(np.sqrt(obj)) / float(np.sqrt(M.fro_norm_squared)),
        optimality_gap=metrics.optimality_gap(M, X),
        blocks_updated=blocks,
    )


def run_solver(M: SimilarityMatrix, X0: np.ndarray, config: SolverConfig) -> SolveResult:
    """Sweep until the gap tolerance, an objective stall, or the sweep cap.

    The input factor is copied; one TraceRecord is appended per completed
    sweep, with the objective and gap measured after the sweep.
    """
    config.validate()
    X = as_factor(X0).copy()
    if X.shape[0] != M.n:
        raise ValueError("X0 has %d rows but M is %d-by-%d" % (X.shape[0], M.n, M.n))
    n, r = X.shape
    m = n * r if config.engine == "sbsum" else n
    cache = GramCache.from_factor(X)
    trace: list[TraceRecord] = []
    t0 = time.perf_counter()
    prev_obj = None
    for sweep_index in range(config.max_sweeps):
        order = next_order(config.policy, m, sweep_index)
        if config.engine == "sbsum":
            sbsum.sweep_sbsum(M, X, cache, order)
        else:
            vbsum.sweep_vbsum(M, X, cache, order, config.inner_steps)
        if (sweep_index + 1) % config.refresh_period == 0:
            cache.refresh(X)
        rec = _record(M, X, sweep_index, m, t0)
        trace.append(rec)
        if rec.optimality_gap <= config.gap_tol:
            return SolveResult(X=X, trace=trace, converged=True, reason="gap_tol")
        if (
            config.rel_obj_tol > 0
            and prev_obj is not None
            and abs(prev_obj - rec.objective) <= config.rel_obj_tol * max(1.0, prev_obj)
        ):
            return SolveResult(X=X, trace=trace, converged=True, reason="rel_obj_tol")
        prev_obj = rec.objective
    return SolveResult(X=X, trace=trace, converged=False, reason="max_sweeps")
