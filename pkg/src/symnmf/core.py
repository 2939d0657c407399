"""Shared data structures for the SNMF solvers.

Contains:
    SimilarityMatrix -- symmetric n-by-n data matrix, dense or CSR
    GramCache        -- running X^T X and row norms, updated recursively
    TraceRecord      -- one per-sweep telemetry row
    as_factor        -- validate/coerce a nonnegative factor matrix
    load_matrix_market / save_matrix_market
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse
from numba import njit

SYMMETRY_RTOL = 1e-12


def as_factor(X) -> np.ndarray:
    """Coerce X to a C-contiguous float64 array and check factor invariants."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("factor matrix must be 2-D, got ndim=%d" % X.ndim)
    if not np.isfinite(X).all():
        raise ValueError("factor matrix contains non-finite entries")
    if (X < 0).any():
        raise ValueError("factor matrix contains negative entries")
    return X


class SimilarityMatrix:
    """Symmetric data matrix with dense or CSR storage.

    Use from_dense / from_sparse / load_matrix_market to construct. Inputs
    that are not symmetric to within SYMMETRY_RTOL are replaced by
    (M + M^T)/2 and a warning is emitted.
    """

    def __init__(self, dense=None, sparse=None):
        if (dense is None) == (sparse is None):
            raise ValueError("exactly one of dense/sparse storage expected")
        if dense is not None:
            self._dense = dense
            self._sp = None
            self.n = dense.shape[0]
            self.nnz = self.n * self.n
            self._diag = np.ascontiguousarray(np.diagonal(dense))
            self._fro2 = float(np.sum(dense * dense))
        else:
            self._dense = None
            self._sp = sparse
            self.n = sparse.shape[0]
            self.nnz = int(sparse.nnz)
            self._diag = np.ascontiguousarray(sparse.diagonal())
            self._fro2 = float(np.sum(sparse.data * sparse.data))

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_dense(cls, array) -> "SimilarityMatrix":
        M = np.ascontiguousarray(array, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("similarity matrix must be square, got shape %r" % (M.shape,))
        if not np.isfinite(M).all():
            raise ValueError("similarity matrix contains non-finite entries")
        asym = np.abs(M - M.T)
        if (asym > SYMMETRY_RTOL * np.maximum(1.0, np.abs(M))).any():
            warnings.warn("input matrix is not symmetric; using (M + M^T)/2")
            M = 0.5 * (M + M.T)
        return cls(dense=M)

    @classmethod
    def from_sparse(cls, matrix) -> "SimilarityMatrix":
        sp = scipy.sparse.csr_matrix(matrix, dtype=np.float64)
        if sp.shape[0] != sp.shape[1]:
            raise ValueError("similarity matrix must be square, got shape %r" % (sp.shape,))
        if not np.isfinite(sp.data).all():
            raise ValueError("similarity matrix contains non-finite entries")
        sp.sum_duplicates()
        sp.eliminate_zeros()
        asym = abs(sp - sp.T)
        scale = max(1.0, abs(sp).max() if sp.nnz else 0.0)
        if asym.nnz and asym.max() > SYMMETRY_RTOL * scale:
            warnings.warn("input matrix is not symmetric; using (M + M^T)/2")
            sp = (sp + sp.T) * 0.5
            sp = scipy.sparse.csr_matrix(sp)
        sp.sort_indices()
        # int64 indices so the compiled kernels see one index dtype; assign
        # the attributes directly because the csr_matrix constructor would
        # downcast small-shape index arrays back to int32
        sp.data = sp.data.astype(np.float64, copy=False)
        sp.indices = sp.indices.astype(np.int64, copy=False)
        sp.indptr = sp.indptr.astype(np.int64, copy=False)
        return cls(sparse=sp)

    # -- storage queries ------------------------------------------------

    @property
    def is_sparse(self) -> bool:
        return self._sp is not None

    @property
    def fro_norm_squared(self) -> float:
        return self._fro2

    def diagonal(self) -> np.ndarray:
        return self._diag

    def csr_arrays(self):
        """Raw (indptr, indices, data) views for the compiled kernels."""
        if self._sp is None:
            raise ValueError("dense matrix has no CSR arrays")
        return self._sp.indptr, self._sp.indices, self._sp.data

    def dense_array(self) -> np.ndarray:
        if self._dense is None:
            raise ValueError("sparse matrix has no dense array; use to_dense()")
        return self._dense

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense.copy()
        return self._sp.toarray()

    def to_scipy(self):
        if self._sp is not None:
            return self._sp.copy()
        return scipy.sparse.csr_matrix(self._dense)

    # -- linear maps ----------------------------------------------------

    def row_dot(self, i: int, v: np.ndarray) -> float:
        """Inner product of row i with vector v, touching stored entries only."""
        if not 0 <= i < self.n:
            raise IndexError("row index %d out of range for n=%d" % (i, self.n))
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError("vector has shape %r, expected (%d,)" % (v.shape, self.n))
        if self._dense is not None:
            return float(self._dense[i] @ v)
        lo, hi = self._sp.indptr[i], self._sp.indptr[i + 1]
        return float(self._sp.data[lo:hi] @ v[self._sp.indices[lo:hi]])

    def row_matvec(self, i: int, X: np.ndarray) -> np.ndarray:
        """Row i of M times a dense n-by-r matrix."""
        if self._dense is not None:
            return self._dense[i] @ X
        lo, hi = self._sp.indptr[i], self._sp.indptr[i + 1]
        return self._sp.data[lo:hi] @ X[self._sp.indices[lo:hi]]

    def matmul(self, X: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return self._dense @ X
        return self._sp @ X


def load_matrix_market(path) -> SimilarityMatrix:
    """Read a .mtx file; array format loads dense, coordinate format loads CSR."""
    M = scipy.io.mmread(path)
    if isinstance(M, np.ndarray):
        return SimilarityMatrix.from_dense(M)
    return SimilarityMatrix.from_sparse(M)


def save_matrix_market(path, M: SimilarityMatrix) -> None:
    if M.is_sparse:
        scipy.io.mmwrite(path, M.to_scipy())
    else:
        scipy.io.mmwrite(path, M.dense_array())


# -- Gram cache -----------------------------------------------------------
#
# The solvers keep gram = X^T X (r-by-r) and diag_xxt[i] = ||X_i:||^2
# up to date across block updates instead of recomputing them, which is
# what makes a sweep O(r * nnz) instead of O(n r^2 + r * nnz).


@njit(cache=True, nogil=True)
def _gram_entry_update(gram, diag_xxt, x_old_row, i, j, x_old, x_new):
    # Rank-two correction for a single changed entry X[i, j]: row j and
    # column j of the Gram matrix each move by delta * (old row i), the
    # (j, j) entry picks up an extra delta^2.
    delta = x_new - x_old
    r = gram.shape[0]
    for k in range(r):
        t = delta * x_old_row[k]
        gram[j, k] += t
        gram[k, j] += t
    gram[j, j] += delta * delta
    diag_xxt[i] += 2.0 * delta * x_old + delta * delta
    if diag_xxt[i] < 0.0:  # round-off can drift slightly negative
        diag_xxt[i] = 0.0


@njit(cache=True, nogil=True)
def _gram_row_update(gram, diag_xxt, x_old_row, x_new_row, i):
    # Replace row i's outer-product contribution: subtract the old one
    # first, then add the new one, so callers that rebuilt the subtracted
    # matrix themselves get bitwise-identical results.
    r = gram.shape[0]
    s = 0.0
    for a in range(r):
        for b in range(r):
            gram[a, b] = (gram[a, b] - x_old_row[a] * x_old_row[b]) + x_new_row[a] * x_new_row[b]
        s += x_new_row[a] * x_new_row[a]
    diag_xxt[i] = s


@njit(cache=True, nogil=True)
def _apply_entry(X, gram, diag_xxt, i, j, x_new):
    # Update the caches while row i still holds the old value, then write.
    x_old = X[i, j]
    _gram_entry_update(gram, diag_xxt, X[i], i, j, x_old, x_new)
    X[i, j] = x_new


@njit(cache=True, nogil=True)
def _apply_row(X, gram, diag_xxt, i, x_new_row):
    _gram_row_update(gram, diag_xxt, X[i], x_new_row, i)
    for a in range(X.shape[1]):
        X[i, a] = x_new_row[a]


class GramCache:
    """Running X^T X and per-row squared norms for a factor matrix."""

    __slots__ = ("gram", "diag_xxt")

    def __init__(self, gram: np.ndarray, diag_xxt: np.ndarray):
        self.gram = gram
        self.diag_xxt = diag_xxt

    @classmethod
    def from_factor(cls, X: np.ndarray) -> "GramCache":
        X = np.asarray(X, dtype=np.float64)
        return cls(X.T @ X, np.einsum("ij,ij->i", X, X))

    def refresh(self, X: np.ndarray) -> None:
        """Recompute both caches from scratch, discarding accumulated round-off."""
        np.matmul(X.T, X, out=self.gram)
        np.einsum("ij,ij->i", X, X, out=self.diag_xxt)

    def copy(self) -> "GramCache":
        return GramCache(self.gram.copy(), self.diag_xxt.copy())

    def update_entry(self, x_old_row, i: int, j: int, x_old: float, x_new: float) -> None:
        """Apply the rank-two correction for X[i, j]: x_old -> x_new.

        x_old_row must be row i before the update (so x_old_row[j] == x_old).
        """
        x_old_row = np.ascontiguousarray(x_old_row, dtype=np.float64)
        r = self.gram.shape[0]
        if x_old_row.shape != (r,):
            raise ValueError("row has shape %r, expected (%d,)" % (x_old_row.shape, r))
        if not 0 <= i < self.diag_xxt.shape[0]:
            raise IndexError("row index %d out of range" % i)
        if not 0 <= j < r:
            raise IndexError("column index %d out of range" % j)
        _gram_entry_update(self.gram, self.diag_xxt, x_old_row, i, j, float(x_old), float(x_new))

    def update_row(self, x_old_row, x_new_row, i: int) -> None:
        """Swap row i's outer-product contribution from x_old_row to x_new_row."""
        x_old_row = np.ascontiguousarray(x_old_row, dtype=np.float64)
        x_new_row = np.ascontiguousarray(x_new_row, dtype=np.float64)
        r = self.gram.shape[0]
        if x_old_row.shape != (r,) or x_new_row.shape != (r,):
            raise ValueError("rows must have shape (%d,)" % r)
        if not 0 <= i < self.diag_xxt.shape[0]:
            raise IndexError("row index %d out of range" % i)
        _gram_row_update(self.gram, self.diag_xxt, x_old_row, x_new_row, i)


@dataclass
class TraceRecord:
    """Telemetry for one sweep (or one parallel round)."""

    sweep_index: int
    elapsed_seconds: float
    objective: float
    relative_residual: float
    optimality_gap: float
    blocks_updated: int
