"""Progress and stationarity measurements.

The objective ||M - X X^T||_F^2 is evaluated through the trace identity
||M||^2 - 2 tr(X^T M X) + ||X^T X||^2 so the n-by-n residual is never
formed; every function here costs O(r * nnz + n r^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SimilarityMatrix, as_factor


def _check_pair(M: SimilarityMatrix, X: np.ndarray):
    if X.ndim != 2 or X.shape[0] != M.n:
        raise ValueError("X has shape %r but M is %d-by-%d" % (X.shape, M.n, M.n))


def objective(M: SimilarityMatrix, X: np.ndarray) -> float:
    """||M - X X^T||_F^2, clamped at zero against round-off."""
    X = np.asarray(X, dtype=np.float64)
    _check_pair(M, X)
    gram = X.T @ X
    val = M.fro_norm_squared - 2.0 * float(np.einsum("ij,ij->", M.matmul(X), X)) + float(np.sum(gram * gram))
    return max(val, 0.0)


def gradient(M: SimilarityMatrix, X: np.ndarray) -> np.ndarray:
    """Gradient of the objective: 4 (X (X^T X) - M X)."""
    X = np.asarray(X, dtype=np.float64)
    _check_pair(M, X)
    return 4.0 * (X @ (X.T @ X) - M.matmul(X))


def optimality_gap(M: SimilarityMatrix, X: np.ndarray) -> float:
    """Max-norm of X minus its projected gradient step, zero iff stationary."""
    X = np.asarray(X, dtype=np.float64)
    _check_pair(M, X)
    step = np.maximum(X - gradient(M, X), 0.0)
    return float(np.max(np.abs(X - step))) if X.size else 0.0


def relative_residual_percent(M: SimilarityMatrix, X: np.ndarray) -> float:
    """100 * ||M - X X^T||_F / ||M||_F."""
    return 100.0 * float(np.sqrt(objective(M, X))) / float(np.sqrt(M.fro_norm_squared))


def curvature_along_iterate(M: SimilarityMatrix, X: np.ndarray) -> float:
    """Second derivative of t -> F((1 + t) X) at t = 0.

    Splitting the Hessian quadratic form into its quartic and data parts
    gives 8 ||X^T X||_F^2 + <X, grad F(X)> exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    _check_pair(M, X)
    gram = X.T @ X
    return 8.0 * float(np.sum(gram * gram)) + float(np.einsum("ij,ij->", X, gradient(M, X)))


def curvature_reference_bound(X: np.ndarray) -> float:
    """8 * sum_i ||X_:i||^4: the certified floor for the curvature at any
    near-stationary nonzero X."""
    X = np.asarray(X, dtype=np.float64)
    col2 = np.einsum("ij,ij->j", X, X)
    return 8.0 * float(np.sum(col2 * col2))


@dataclass
class StationarityReport:
    objective: float
    relative_residual_percent: float
    optimality_gap: float
    curvature_along_iterate: float


def stationarity_report(M: SimilarityMatrix, X: np.ndarray) -> StationarityReport:
    X = as_factor(X)
    return StationarityReport(
        objective=objective(M, X),
        relative_residual_percent=relative_residual_percent(M, X),
        optimality_gap=optimality_gap(M, X),
        curvature_along_iterate=curvature_along_iterate(M, X),
    )
