"""Entry-block solver: one nonnegative scalar of X at a time.

For entry (i, j) the objective restricted to X[i, j] is an exact quartic
whose coefficients come from the Gram caches in O(r + nnz(row i)). The
surrogate adds a quadratic term that lifts the curvature to b^2/(3a), which
makes the minimizer a closed-form cube root; minimizing it never increases
the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import GramCache, SimilarityMatrix, _apply_entry
from .cubic import _surrogate_root


@dataclass
class EntryUpdateContext:
    """Quartic coefficients of the objective restricted to entry (i, j),
    expanded around the current value (a is always 4)."""

    i: int
    j: int
    b: float
    c: float
    d: float


@njit(cache=True, nogil=True)
def _coeffs_dense(M, diag_m, X, gram, diag_xxt, i, j):
    xij = X[i, j]
    b = 12.0 * xij
    c = 4.0 * (diag_xxt[i] - diag_m[i] + gram[j, j] + xij * xij)
    r = X.shape[1]
    s1 = 0.0
    for k in range(r):
        s1 += X[i, k] * gram[k, j]
    s2 = 0.0
    n = X.shape[0]
    for k in range(n):
        s2 += M[i, k] * X[k, j]
    d = 4.0 * (s1 - s2)
    return b, c, d


@njit(cache=True, nogil=True)
def _coeffs_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, j):
    xij = X[i, j]
    b = 12.0 * xij
    c = 4.0 * (diag_xxt[i] - diag_m[i] + gram[j, j] + xij * xij)
    r = X.shape[1]
    s1 = 0.0
    for k in range(r):
        s1 += X[i, k] * gram[k, j]
    s2 = 0.0
    for t in range(indptr[i], indptr[i + 1]):
        s2 += data[t] * X[indices[t], j]
    d = 4.0 * (s1 - s2)
    return b, c, d


@njit(cache=True, nogil=True)
def _update_entry_dense(M, diag_m, X, gram, diag_xxt, i, j):
    b, c, d = _coeffs_dense(M, diag_m, X, gram, diag_xxt, i, j)
    third_b2 = b * b / 12.0
    if c < third_b2:
        c = third_b2
    x_new = _surrogate_root(4.0, b, c, d)
    _apply_entry(X, gram, diag_xxt, i, j, x_new)
    return x_new


@njit(cache=True, nogil=True)
def _update_entry_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, j):
    b, c, d = _coeffs_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, j)
    third_b2 = b * b / 12.0
    if c < third_b2:
        c = third_b2
    x_new = _surrogate_root(4.0, b, c, d)
    _apply_entry(X, gram, diag_xxt, i, j, x_new)
    return x_new


@njit(cache=True, nogil=True)
def _sweep_dense(M, diag_m, X, gram, diag_xxt, order):
    r = X.shape[1]
    for t in range(order.shape[0]):
        blk = order[t]
        i = blk // r
        j = blk - i * r
        _update_entry_dense(M, diag_m, X, gram, diag_xxt, i, j)


@njit(cache=True, nogil=True)
def _sweep_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, order):
    r = X.shape[1]
    for t in range(order.shape[0]):
        blk = order[t]
        i = blk // r
        j = blk - i * r
        _update_entry_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, j)


def _check_state(M: SimilarityMatrix, X: np.ndarray, cache: GramCache):
    n, r = X.shape
    if M.n != n:
        raise ValueError("X has %d rows but M is %d-by-%d" % (n, M.n, M.n))
    if cache.gram.shape != (r, r) or cache.diag_xxt.shape != (n,):
        raise ValueError("cache shapes do not match X")


def compute_entry_coefficients(
    M: SimilarityMatrix, X: np.ndarray, cache: GramCache, i: int, j: int
) -> EntryUpdateContext:
    """Quartic coefficients for entry (i, j) at the current X (unclamped c)."""
    _check_state(M, X, cache)
    n, r = X.shape
    if not (0 <= i < n and 0 <= j < r):
        raise IndexError("entry (%d, %d) out of range for %d-by-%d factor" % (i, j, n, r))
    if M.is_sparse:
        indptr, indices, data = M.csr_arrays()
        b, c, d = _coeffs_csr(indptr, indices, data, M.diagonal(), X, cache.gram, cache.diag_xxt, i, j)
    else:
        b, c, d = _coeffs_dense(M.dense_array(), M.diagonal(), X, cache.gram, cache.diag_xxt, i, j)
    return EntryUpdateContext(i=i, j=j, b=b, c=c, d=d)


def update_entry(M: SimilarityMatrix, X: np.ndarray, cache: GramCache, i: int, j: int) -> float:
    """Minimize the surrogate for entry (i, j) in place; returns the new value.

    X and both caches are updated together, so they stay consistent.
    """
    _check_state(M, X, cache)
    n, r = X.shape
    if not (0 <= i < n and 0 <= j < r):
        raise IndexError("entry (%d, %d) out of range for %d-by-%d factor" % (i, j, n, r))
    if M.is_sparse:
        indptr, indices, data = M.csr_arrays()
        return float(
            _update_entry_csr(indptr, indices, data, M.diagonal(), X, cache.gram, cache.diag_xxt, i, j)
        )
    return float(_update_entry_dense(M.dense_array(), M.diagonal(), X, cache.gram, cache.diag_xxt, i, j))


def sweep_sbsum(M: SimilarityMatrix, X: np.ndarray, cache: GramCache, order=None) -> None:
    """Run one sweep of entry updates in the given block order.

    order enumerates flattened entries (block id = i * r + j) and must be a
    permutation of range(n * r); None means the cyclic row-major order.
    """
    _check_state(M, X, cache)
    n, r = X.shape
    m = n * r
    if order is None:
        order = np.arange(m, dtype=np.int64)
    else:
        order = np.ascontiguousarray(order, dtype=np.int64)
        if order.shape != (m,) or not np.array_equal(np.sort(order), np.arange(m)):
            raise ValueError("order must be a permutation of range(%d)" % m)
    if M.is_sparse:
        indptr, indices, data = M.csr_arrays()
        _sweep_csr(indptr, indices, data, M.diagonal(), X, cache.gram, cache.diag_xxt, order)
    else:
        _sweep_dense(M.dense_array(), M.diagonal(), X, cache.gram, cache.diag_xxt, order)
