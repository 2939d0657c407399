"""Shared-memory parallel rounds over row-partitioned workers.

Each round: every worker copies the shared (X, caches) snapshot, runs its
selected blocks sequentially through the same compiled kernels as the
serial engines (blocks live inside the worker's own row range, so workers
never touch each other's rows), and returns an update log. A single
merge pass then replays the logs in worker-index order, damping each block
by the round's stepsize, which keeps the shared caches exactly consistent
with the merged factor and makes the result independent of thread timing.

With one worker, full selection, and stepsize 1 the replay performs
bit-for-bit the same arithmetic as a serial sweep.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from . import metrics, sbsum, vbsum
from .core import GramCache, SimilarityMatrix, TraceRecord, _apply_entry, _apply_row, as_factor
from .scheduler import DEFAULT_GAP_TOL, DEFAULT_REFRESH_PERIOD

SELECTION_KINDS = ("random", "cyclic")
STEPSIZE_KINDS = ("constant", "diminishing")

# Values a worker must broadcast per updated block: an entry travels as
# (value, row, column); a row travels as r values plus its index.
ENTRY_BLOCK_VALUES = 3


@dataclass(frozen=True)
class PartitionPlan:
    """Contiguous near-equal row ranges, one per worker."""

    workers: int
    row_ranges: tuple
    blocks_per_worker: Optional[int] = None  # None means select every local block

    @property
    def n(self) -> int:
        return self.row_ranges[-1][1]


def plan_partition(n: int, workers: int, blocks_per_worker: Optional[int] = None) -> PartitionPlan:
    """Split rows 0..n-1 into `workers` contiguous ranges of near-equal size."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= workers <= n:
        raise ValueError("workers must be in [1, %d], got %d" % (n, workers))
    if blocks_per_worker is not None and blocks_per_worker < 1:
        raise ValueError("blocks_per_worker must be >= 1")
    base, rem = divmod(n, workers)
    ranges = []
    start = 0
    for p in range(workers):
        stop = start + base + (1 if p < rem else 0)
        ranges.append((start, stop))
        start = stop
    return PartitionPlan(workers=workers, row_ranges=tuple(ranges), blocks_per_worker=blocks_per_worker)


@dataclass(frozen=True)
class StepsizeRule:
    """Merge stepsize per round: constant gamma0 or gamma0 / sqrt(1 + k)."""

    kind: str = "constant"
    gamma0: float = 1.0

    def __post_init__(self):
        if self.kind not in STEPSIZE_KINDS:
            raise ValueError("unknown stepsize kind %r; expected one of %r" % (self.kind, STEPSIZE_KINDS))
        if not 0.0 < self.gamma0 <= 1.0:
            raise ValueError("gamma0 must be in (0, 1], got %g" % self.gamma0)

    def value(self, round_index: int) -> float:
        if self.kind == "constant":
            return self.gamma0
        return self.gamma0 / np.sqrt(1.0 + round_index)


@njit(cache=True, nogil=True)
def _worker_entries_dense(M, diag_m, X, gram, diag_xxt, blocks, log_new):
    r = X.shape[1]
    for t in range(blocks.shape[0]):
        blk = blocks[t]
        i = blk // r
        j = blk - i * r
        log_new[t] = sbsum._update_entry_dense(M, diag_m, X, gram, diag_xxt, i, j)


@njit(cache=True, nogil=True)
def _worker_entries_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, blocks, log_new):
    r = X.shape[1]
    for t in range(blocks.shape[0]):
        blk = blocks[t]
        i = blk // r
        j = blk - i * r
        log_new[t] = sbsum._update_entry_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, j)


@njit(cache=True, nogil=True)
def _worker_rows_dense(M, diag_m, X, gram, diag_xxt, rows, new_rows, inner_steps):
    r = X.shape[1]
    P = np.empty((r, r))
    q = np.empty(r)
    b = np.empty(r)
    x = np.empty(r)
    for t in range(rows.shape[0]):
        i = rows[t]
        vbsum._update_row_dense(M, diag_m, X, gram, diag_xxt, i, inner_steps, P, q, b, x)
        for a in range(r):
            new_rows[t, a] = X[i, a]


@njit(cache=True, nogil=True)
def _worker_rows_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, rows, new_rows, inner_steps):
    r = X.shape[1]
    P = np.empty((r, r))
    q = np.empty(r)
    b = np.empty(r)
    x = np.empty(r)
    for t in range(rows.shape[0]):
        i = rows[t]
        vbsum._update_row_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, inner_steps, P, q, b, x)
        for a in range(r):
            new_rows[t, a] = X[i, a]


@njit(cache=True, nogil=True)
def _merge_entries(X, gram, diag_xxt, blocks, log_new, gamma):
    r = X.shape[1]
    for t in range(blocks.shape[0]):
        blk = blocks[t]
        i = blk // r
        j = blk - i * r
        if gamma == 1.0:
            merged = log_new[t]
        else:
            x_old = X[i, j]  # still the round-start value: blocks are visited once
            merged = x_old + gamma * (log_new[t] - x_old)
            if merged < 0.0:
                merged = 0.0
        _apply_entry(X, gram, diag_xxt, i, j, merged)


@njit(cache=True, nogil=True)
def _merge_rows(X, gram, diag_xxt, rows, new_rows, gamma, buf):
    r = X.shape[1]
    for t in range(rows.shape[0]):
        i = rows[t]
        if gamma == 1.0:
            for a in range(r):
                buf[a] = new_rows[t, a]
        else:
            for a in range(r):
                v = X[i, a] + gamma * (new_rows[t, a] - X[i, a])
                buf[a] = v if v > 0.0 else 0.0
        _apply_row(X, gram, diag_xxt, i, buf)


def _select_blocks(plan: PartitionPlan, worker: int, blocks_per_row: int, selection: str,
                   seed: int, round_index: int) -> np.ndarray:
    start, stop = plan.row_ranges[worker]
    lo, hi = start * blocks_per_row, stop * blocks_per_row
    pool = hi - lo
    count = pool if plan.blocks_per_worker is None else min(plan.blocks_per_worker, pool)
    if selection == "cyclic":
        return np.arange(lo, lo + count, dtype=np.int64)
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(round_index), int(worker)))
    rng = np.random.Generator(np.random.Philox(seq))
    return (lo + rng.permutation(pool)[:count]).astype(np.int64)


@dataclass
class RoundStats:
    blocks_updated: int
    comm_values: int


def parallel_round(
    M: SimilarityMatrix,
    X: np.ndarray,
    cache: GramCache,
    plan: PartitionPlan,
    engine: str,
    gamma: float,
    round_index: int = 0,
    seed: int = 0,
    selection: str = "random",
    inner_steps: int = vbsum.DEFAULT_INNER_STEPS,
    executor: Optional[ThreadPoolExecutor] = None,
) -> RoundStats:
    """Run one snapshot round in place on (X, cache); returns the counters.

    If any worker raises, X and the caches are left at the snapshot.
    """
    if engine not in ("sbsum", "vbsum"):
        raise ValueError("unknown engine %r" % engine)
    if selection not in SELECTION_KINDS:
        raise ValueError("unknown selection %r; expected one of %r" % (selection, SELECTION_KINDS))
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1], got %g" % gamma)
    n, r = X.shape
    if plan.n != n:
        raise ValueError("plan covers %d rows but X has %d" % (plan.n, n))
    blocks_per_row = r if engine == "sbsum" else 1
    gamma = float(gamma)

    if engine == "sbsum":
        if M.is_sparse:
            indptr, indices, data = M.csr_arrays()

            def work(blocks):
                Xloc, gram, diag = X.copy(), cache.gram.copy(), cache.diag_xxt.copy()
                log_new = np.empty(blocks.shape[0])
                _worker_entries_csr(indptr, indices, data, M.diagonal(), Xloc, gram, diag, blocks, log_new)
                return log_new
        else:
            Md = M.dense_array()

            def work(blocks):
                Xloc, gram, diag = X.copy(), cache.gram.copy(), cache.diag_xxt.copy()
                log_new = np.empty(blocks.shape[0])
                _worker_entries_dense(Md, M.diagonal(), Xloc, gram, diag, blocks, log_new)
                return log_new
    else:
        if M.is_sparse:
            indptr, indices, data = M.csr_arrays()

            def work(rows):
                Xloc, gram, diag = X.copy(), cache.gram.copy(), cache.diag_xxt.copy()
                new_rows = np.empty((rows.shape[0], r))
                _worker_rows_csr(indptr, indices, data, M.diagonal(), Xloc, gram, diag, rows, new_rows, inner_steps)
                return new_rows
        else:
            Md = M.dense_array()

            def work(rows):
                Xloc, gram, diag = X.copy(), cache.gram.copy(), cache.diag_xxt.copy()
                new_rows = np.empty((rows.shape[0], r))
                _worker_rows_dense(Md, M.diagonal(), Xloc, gram, diag, rows, new_rows, inner_steps)
                return new_rows

    selections = [
        _select_blocks(plan, p, blocks_per_row, selection, seed, round_index) for p in range(plan.workers)
    ]
    # Workers only read the shared state; all writes happen in the merge below.
    if plan.workers == 1:
        logs = [work(selections[0])]
    elif executor is not None:
        logs = list(executor.map(work, selections))
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            logs = list(pool.map(work, selections))

    buf = np.empty(r)
    for p in range(plan.workers):
        if engine == "sbsum":
            _merge_entries(X, cache.gram, cache.diag_xxt, selections[p], logs[p], gamma)
        else:
            _merge_rows(X, cache.gram, cache.diag_xxt, selections[p], logs[p], gamma, buf)

    blocks_updated = int(sum(s.shape[0] for s in selections))
    per_block = ENTRY_BLOCK_VALUES if engine == "sbsum" else r + 1
    return RoundStats(
        blocks_updated=blocks_updated,
        comm_values=per_block * blocks_updated * (plan.workers - 1),
    )


@dataclass
class ParallelConfig:
    engine: str = "vbsum"
    workers: int = 1
    blocks_per_worker: Optional[int] = None
    selection: str = "random"
    stepsize: StepsizeRule = field(default_factory=StepsizeRule)
    inner_steps: int = vbsum.DEFAULT_INNER_STEPS
    max_rounds: int = 1000
    gap_tol: float = DEFAULT_GAP_TOL
    refresh_period: int = DEFAULT_REFRESH_PERIOD
    seed: int = 0

    def validate(self):
        if self.engine not in ("sbsum", "vbsum"):
            raise ValueError("unknown engine %r" % self.engine)
        if self.selection not in SELECTION_KINDS:
            raise ValueError("unknown selection %r" % self.selection)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.blocks_per_worker is not None and self.blocks_per_worker < 1:
            raise ValueError("blocks_per_worker must be >= 1")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be >= 1")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be >= 0")
        if self.refresh_period < 1:
            raise ValueError("refresh_period must be >= 1")


@dataclass
class ParallelResult:
    X: np.ndarray
    trace: list[TraceRecord]
    converged: bool
    reason: str
    comm_values_per_round: list[int]


def run_parallel(M: SimilarityMatrix, X0: np.ndarray, config: ParallelConfig) -> ParallelResult:
    """Round-based driver mirroring run_solver; one TraceRecord per round."""
    config.validate()
    X = as_factor(X0).copy()
    if X.shape[0] != M.n:
        raise ValueError("X0 has %d rows but M is %d-by-%d" % (X.shape[0], M.n, M.n))
    plan = plan_partition(M.n, config.workers, config.blocks_per_worker)
    cache = GramCache.from_factor(X)
    trace: list[TraceRecord] = []
    comm: list[int] = []
    t0 = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for round_index in range(config.max_rounds):
            stats = parallel_round(
                M, X, cache, plan,
                engine=config.engine,
                gamma=config.stepsize.value(round_index),
                round_index=round_index,
                seed=config.seed,
                selection=config.selection,
                inner_steps=config.inner_steps,
                executor=executor,
            )
            if (round_index + 1) % config.refresh_period == 0:
                cache.refresh(X)
            obj = metrics.objective(M, X)
            rec = TraceRecord(
                sweep_index=round_index,
                elapsed_seconds=time.perf_counter() - t0,
                objective=obj,
                relative_residual=100.0 * float(np.sqrt(obj)) / float(np.sqrt(M.fro_norm_squared)),
                optimality_gap=metrics.optimality_gap(M, X),
                blocks_updated=stats.blocks_updated,
            )
            trace.append(rec)
            comm.append(stats.comm_values)
            if rec.optimality_gap <= config.gap_tol:
                return ParallelResult(X=X, trace=trace, converged=True, reason="gap_tol",
                                      comm_values_per_round=comm)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return ParallelResult(X=X, trace=trace, converged=False, reason="max_rounds",
                          comm_values_per_round=comm)
