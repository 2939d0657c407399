import numpy as np
import pytest

from symnmf import (
    GeneratorSpec,
    GramCache,
    SimilarityMatrix,
    curvature_along_iterate,
    curvature_reference_bound,
    generate,
    gradient,
    initialize,
    objective,
    optimality_gap,
    relative_residual_percent,
    stationarity_report,
    sweep_vbsum,
    update_row,
)

from conftest import frobenius_objective, random_state, second_difference


def test_objective_examples():
    rng = np.random.default_rng(0)
    M, _, _ = random_state(rng, 5, 2)
    assert objective(M, np.zeros((5, 2))) == M.fro_norm_squared

    X = np.array([[1.0, 2.0], [0.0, 3.0], [2.0, 1.0]])
    M_exact = SimilarityMatrix.from_dense(X @ X.T)
    assert objective(M_exact, X) == 0.0

    M = SimilarityMatrix.from_dense(np.ones((2, 2)))
    assert objective(M, np.array([[1.0], [0.0]])) == 3.0

    with pytest.raises(ValueError):
        objective(M, np.ones((3, 1)))


def test_objective_matches_residual_oracle():
    rng = np.random.default_rng(1)
    for sparse in (False, True):
        for _ in range(25):
            n = int(rng.integers(2, 12))
            r = int(rng.integers(1, 5))
            M, X, _ = random_state(rng, n, r, sparse=sparse)
            ref = frobenius_objective(M.to_dense(), X)
            assert abs(objective(M, X) - ref) <= 1e-9 * max(1.0, ref)


def test_gradient_zero_cases_and_finite_difference():
    X = np.array([[1.0, 2.0], [3.0, 1.0]])
    M = SimilarityMatrix.from_dense(X @ X.T)
    np.testing.assert_array_equal(gradient(M, X), np.zeros((2, 2)))

    rng = np.random.default_rng(2)
    M, _, _ = random_state(rng, 4, 2)
    np.testing.assert_array_equal(gradient(M, np.zeros((4, 2))), np.zeros((4, 2)))

    for _ in range(10):
        n = int(rng.integers(2, 9))
        r = int(rng.integers(1, 4))
        M, X, _ = random_state(rng, n, r)
        G = gradient(M, X)
        scale = max(1.0, np.abs(G).max())
        h = 1e-6
        for _ in range(5):
            i = int(rng.integers(n))
            j = int(rng.integers(r))
            Xp = X.copy()
            Xp[i, j] += h
            Xm = X.copy()
            Xm[i, j] -= h
            fd = (frobenius_objective(M.to_dense(), Xp) - frobenius_objective(M.to_dense(), Xm)) / (2 * h)
            assert abs(G[i, j] - fd) <= 1e-4 * scale


def test_optimality_gap_examples():
    X = np.array([[1.0], [2.0]])
    M = SimilarityMatrix.from_dense(X @ X.T)
    assert optimality_gap(M, X) == 0.0

    rng = np.random.default_rng(3)
    M, _, _ = random_state(rng, 4, 2)
    assert optimality_gap(M, np.zeros((4, 2))) == 0.0

    M1 = SimilarityMatrix.from_dense(np.array([[1.0]]))
    assert optimality_gap(M1, np.array([[2.0]])) == 2.0


def test_relative_residual_formula():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(2, 10))
        r = int(rng.integers(1, 4))
        M, X, _ = random_state(rng, n, r)
        ref = 100.0 * np.sqrt(frobenius_objective(M.to_dense(), X) / M.fro_norm_squared)
        assert abs(relative_residual_percent(M, X) - ref) <= 1e-9 * max(1.0, ref)
    X = np.array([[1.0], [2.0]])
    assert relative_residual_percent(SimilarityMatrix.from_dense(X @ X.T), X) == 0.0


def test_curvature_identity_and_finite_difference():
    rng = np.random.default_rng(5)
    M, _, _ = random_state(rng, 4, 2)
    assert curvature_along_iterate(M, np.zeros((4, 2))) == 0.0

    for _ in range(20):
        n = int(rng.integers(2, 9))
        r = int(rng.integers(1, 4))
        M, X, _ = random_state(rng, n, r)
        val = curvature_along_iterate(M, X)
        # independent expansion of F((1+t)X) in t
        gram = X.T @ X
        A = float(np.einsum("ij,ij->", M.to_dense() @ X, X))
        B = float(np.sum(gram * gram))
        assert abs(val - (12.0 * B - 4.0 * A)) <= 1e-9 * max(1.0, abs(val))
        fd = second_difference(lambda t: frobenius_objective(M.to_dense(), (1.0 + t) * X), 0.0)
        assert abs(val - fd) <= 1e-3 * max(1.0, abs(val))


def test_curvature_reference_bound_value():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert curvature_reference_bound(X) == 8.0 * (10.0 ** 2 + 20.0 ** 2)


def test_certificate_at_converged_point():
    # Drive a small noisy Gramian instance to a BSUM fixed point: row
    # updates stop moving, the gap certifies stationarity, and the
    # curvature along the iterate clears the second-order floor.
    spec = GeneratorSpec(method="ck", n=10, r=2, rng_seed=2)
    M = generate(spec)
    X = initialize(M, 2, seed=2)
    cache = GramCache.from_factor(X)
    for _ in range(500):
        sweep_vbsum(M, X, cache)
    cache.refresh(X)
    for i in range(10):
        before = X[i].copy()
        update_row(M, X, cache, i)
        assert np.abs(X[i] - before).max() <= 1e-9
    gap = optimality_gap(M, X)
    assert gap <= 1e-6
    assert np.any(X > 0)
    sigma = curvature_reference_bound(X) / 8.0
    assert curvature_along_iterate(M, X) >= 8.0 * sigma - 1e-6 * (1.0 + sigma)


def test_stationarity_report_fields():
    rng = np.random.default_rng(6)
    M, X, _ = random_state(rng, 6, 2)
    rep = stationarity_report(M, X)
    assert rep.objective >= 0.0
    assert rep.relative_residual_percent >= 0.0
    assert rep.optimality_gap >= 0.0
    assert np.isfinite(rep.curvature_along_iterate)
    assert rep.objective == objective(M, X)
    assert rep.optimality_gap == optimality_gap(M, X)
