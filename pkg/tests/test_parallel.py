import numpy as np
import pytest

from symnmf import (
    GeneratorSpec,
    GramCache,
    ParallelConfig,
    PartitionPlan,
    SolverConfig,
    StepsizeRule,
    generate,
    initialize,
    objective,
    parallel_round,
    plan_partition,
    run_parallel,
    run_solver,
    sweep_sbsum,
    sweep_vbsum,
    update_row,
)

from conftest import random_state


def test_plan_partition_examples():
    plan = plan_partition(10, 3)
    assert plan.row_ranges == ((0, 4), (4, 7), (7, 10))

    plan = plan_partition(5, 5)
    assert plan.row_ranges == tuple((i, i + 1) for i in range(5))

    plan = plan_partition(16242, 16)
    sizes = [stop - start for start, stop in plan.row_ranges]
    assert set(sizes) <= {1015, 1016}
    assert sum(sizes) == 16242
    assert plan.row_ranges[0][0] == 0
    assert plan.n == 16242
    for (_, stop), (start, _) in zip(plan.row_ranges, plan.row_ranges[1:]):
        assert stop == start

    with pytest.raises(ValueError):
        plan_partition(5, 0)
    with pytest.raises(ValueError):
        plan_partition(5, 6)
    with pytest.raises(ValueError):
        plan_partition(5, 2, blocks_per_worker=0)


def test_stepsize_rule():
    const = StepsizeRule(kind="constant", gamma0=0.7)
    assert const.value(0) == 0.7
    assert const.value(9) == 0.7
    dim = StepsizeRule(kind="diminishing", gamma0=1.0)
    assert dim.value(0) == 1.0
    assert abs(dim.value(3) - 0.5) <= 1e-15
    assert all(0.0 < dim.value(k) <= 1.0 for k in range(100))
    with pytest.raises(ValueError):
        StepsizeRule(kind="linesearch")
    with pytest.raises(ValueError):
        StepsizeRule(gamma0=0.0)
    with pytest.raises(ValueError):
        StepsizeRule(gamma0=1.1)


def test_zero_stepsize_keeps_factor():
    rng = np.random.default_rng(0)
    for engine in ("sbsum", "vbsum"):
        M, X, cache = random_state(rng, 8, 2)
        X_before = X.copy()
        plan = plan_partition(8, 2)
        parallel_round(M, X, cache, plan, engine=engine, gamma=0.0)
        np.testing.assert_array_equal(X, X_before)
        assert np.abs(cache.gram - X.T @ X).max() <= 1e-12


def test_single_worker_full_selection_is_a_serial_sweep():
    rng = np.random.default_rng(1)
    for engine, sweep in (("sbsum", sweep_sbsum), ("vbsum", sweep_vbsum)):
        for sparse in (False, True):
            M, X, cache = random_state(rng, 9, 3, sparse=sparse)
            X_par, cache_par = X.copy(), cache.copy()
            plan = plan_partition(9, 1)
            parallel_round(M, X_par, cache_par, plan, engine=engine, gamma=1.0, selection="cyclic")
            sweep(M, X, cache)
            np.testing.assert_array_equal(X_par, X)
            np.testing.assert_array_equal(cache_par.gram, cache.gram)
            np.testing.assert_array_equal(cache_par.diag_xxt, cache.diag_xxt)


def test_snapshot_isolation_two_workers():
    # Each worker must solve against the round-start state, so the merged
    # factor equals per-worker serial updates done on independent copies.
    rng = np.random.default_rng(2)
    M, X, cache = random_state(rng, 6, 2)
    plan = plan_partition(6, 2)

    expected = X.copy()
    for start, stop in plan.row_ranges:
        X_snap, cache_snap = X.copy(), cache.copy()
        for i in range(start, stop):
            update_row(M, X_snap, cache_snap, i)
        expected[start:stop] = X_snap[start:stop]

    parallel_round(M, X, cache, plan, engine="vbsum", gamma=1.0, selection="cyclic")
    np.testing.assert_array_equal(X, expected)


def test_communication_counters():
    rng = np.random.default_rng(3)
    n, r = 10, 3
    M, X, cache = random_state(rng, n, r)

    # entry engine: 3 values per entry, J entries per worker, P - 1 peers
    plan = plan_partition(n, 2, blocks_per_worker=4)
    stats = parallel_round(M, X, cache, plan, engine="sbsum", gamma=1.0)
    assert stats.blocks_updated == 8
    assert stats.comm_values == 3 * 8 * (2 - 1)

    # row engine: r + 1 values per row
    stats = parallel_round(M, X, cache, plan, engine="vbsum", gamma=1.0)
    assert stats.blocks_updated == 8
    assert stats.comm_values == (r + 1) * 8 * (2 - 1)

    # single worker exchanges nothing
    plan1 = plan_partition(n, 1)
    stats = parallel_round(M, X, cache, plan1, engine="vbsum", gamma=1.0)
    assert stats.blocks_updated == n
    assert stats.comm_values == 0

    # selection caps at the local pool
    plan_big = plan_partition(n, 2, blocks_per_worker=999)
    stats = parallel_round(M, X, cache, plan_big, engine="vbsum", gamma=1.0)
    assert stats.blocks_updated == n


def test_round_validation_and_worker_failure():
    rng = np.random.default_rng(4)
    M, X, cache = random_state(rng, 6, 2)
    plan = plan_partition(6, 2)
    with pytest.raises(ValueError):
        parallel_round(M, X, cache, plan, engine="qr", gamma=1.0)
    with pytest.raises(ValueError):
        parallel_round(M, X, cache, plan, engine="vbsum", gamma=1.5)
    with pytest.raises(ValueError):
        parallel_round(M, X, cache, plan, engine="vbsum", gamma=1.0, selection="greedy")
    with pytest.raises(ValueError):
        parallel_round(M, X, cache, plan_partition(5, 2), engine="vbsum", gamma=1.0)

    class BoomExecutor:
        def map(self, fn, items):
            raise RuntimeError("worker died")

    X_before, gram_before = X.copy(), cache.gram.copy()
    with pytest.raises(RuntimeError, match="worker died"):
        parallel_round(M, X, cache, plan, engine="vbsum", gamma=1.0, executor=BoomExecutor())
    np.testing.assert_array_equal(X, X_before)
    np.testing.assert_array_equal(cache.gram, gram_before)


def test_nonnegativity_with_damped_steps():
    rng = np.random.default_rng(5)
    M, X, cache = random_state(rng, 12, 3)
    plan = plan_partition(12, 3)
    rule = StepsizeRule(kind="diminishing", gamma0=0.9)
    for k in range(20):
        parallel_round(M, X, cache, plan, engine="vbsum", gamma=rule.value(k), round_index=k, seed=1)
        assert (X >= 0.0).all()
    assert np.abs(cache.gram - X.T @ X).max() <= 1e-8 * max(1.0, np.abs(cache.gram).max())


def test_four_workers_match_serial_quality():
    spec = GeneratorSpec(method="ck", n=20, r=4, rng_seed=1)
    M = generate(spec)
    X0 = initialize(M, 4, seed=1)

    serial = run_solver(M, X0, SolverConfig(engine="vbsum", gap_tol=1e-6, max_sweeps=2000))
    assert serial.converged
    f_serial = serial.trace[-1].objective

    config = ParallelConfig(engine="vbsum", workers=4, max_rounds=500, gap_tol=0.0, seed=1)
    result = run_parallel(M, X0, config)
    f_par = result.trace[-1].objective
    assert abs(f_par - f_serial) <= 0.01 * f_serial


def test_run_parallel_driver_behavior():
    spec = GeneratorSpec(method="ck", n=12, r=3, rng_seed=3)
    M = generate(spec)
    X0 = initialize(M, 3, seed=3)

    config = ParallelConfig(engine="vbsum", workers=2, max_rounds=500, gap_tol=1e-4, seed=7)
    a = run_parallel(M, X0, config)
    b = run_parallel(M, X0, config)
    assert a.converged and a.reason == "gap_tol"
    np.testing.assert_array_equal(a.X, b.X)
    assert [rec.objective for rec in a.trace] == [rec.objective for rec in b.trace]
    assert len(a.comm_values_per_round) == len(a.trace)
    assert all(rec.objective >= 0.0 for rec in a.trace)
    assert a.trace[-1].optimality_gap <= 1e-4

    empty = run_parallel(M, X0, ParallelConfig(max_rounds=0))
    np.testing.assert_array_equal(empty.X, X0)
    assert empty.trace == [] and not empty.converged and empty.reason == "max_rounds"

    with pytest.raises(ValueError):
        run_parallel(M, X0, ParallelConfig(workers=0))
    with pytest.raises(ValueError):
        run_parallel(M, np.ones((5, 3)), ParallelConfig())
