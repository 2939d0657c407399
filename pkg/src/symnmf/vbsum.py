"""Row-block solver: one nonnegative row of X at a time.

The objective restricted to row i is ||x||^4 + 2 x^T Q x - 4 q^T x up to a
constant. Each inner step majorizes the quadratic term at the current row
with curvature S (a Perron bound on Q's spectrum, so the surrogate really
is an upper bound), whose minimizer lies along the clipped direction
[b]_+ at a radius given by a depressed cubic root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import GramCache, SimilarityMatrix, _apply_row
from .cubic import _depressed_root

DEFAULT_INNER_STEPS = 10


@dataclass
class RowSubproblem:
    """Frozen data for row i's subproblem: minimize
    ||x||^4 + 2 x^T (P - m_ii I) x - 4 q^T x over x >= 0."""

    i: int
    P: np.ndarray
    q: np.ndarray
    m_ii: float
    s_coef: float


@njit(cache=True, nogil=True)
def _build_dense(M, diag_m, X, gram, i, P, q):
    n, r = X.shape
    for a in range(r):
        xa = X[i, a]
        for b in range(r):
            P[a, b] = gram[a, b] - xa * X[i, b]
        q[a] = 0.0
    for k in range(n):
        m = M[i, k]
        for a in range(r):
            q[a] += m * X[k, a]
    m_ii = diag_m[i]
    s_max = -np.inf
    for a in range(r):
        q[a] -= m_ii * X[i, a]
        rowsum = 0.0
        for b in range(r):
            rowsum += P[a, b]
        if rowsum > s_max:
            s_max = rowsum
    s_coef = s_max - m_ii
    if s_coef < 0.0:
        s_coef = 0.0
    return m_ii, s_coef


@njit(cache=True, nogil=True)
def _build_csr(indptr, indices, data, diag_m, X, gram, i, P, q):
    r = X.shape[1]
    for a in range(r):
        xa = X[i, a]
        for b in range(r):
            P[a, b] = gram[a, b] - xa * X[i, b]
        q[a] = 0.0
    for t in range(indptr[i], indptr[i + 1]):
        m = data[t]
        k = indices[t]
        for a in range(r):
            q[a] += m * X[k, a]
    m_ii = diag_m[i]
    s_max = -np.inf
    for a in range(r):
        q[a] -= m_ii * X[i, a]
        rowsum = 0.0
        for b in range(r):
            rowsum += P[a, b]
        if rowsum > s_max:
            s_max = rowsum
    s_coef = s_max - m_ii
    if s_coef < 0.0:
        s_coef = 0.0
    return m_ii, s_coef


@njit(cache=True, nogil=True)
def _inner_step(P, q, m_ii, s_coef, x, b):
    # b = q + (S + m_ii) x - P x; the surrogate minimizer points along [b]_+.
    r = x.shape[0]
    norm2 = 0.0
    for a in range(r):
        px = 0.0
        for k in range(r):
            px += P[a, k] * x[k]
        v = q[a] + (s_coef + m_ii) * x[a] - px
        if v < 0.0:
            v = 0.0
        b[a] = v
        norm2 += v * v
    if norm2 == 0.0:
        for a in range(r):
            x[a] = 0.0
        return
    beta = np.sqrt(norm2)
    scale = _depressed_root(s_coef, beta) / beta
    for a in range(r):
        x[a] = b[a] * scale


@njit(cache=True, nogil=True)
def _update_row_dense(M, diag_m, X, gram, diag_xxt, i, inner_steps, P, q, b, x):
    m_ii, s_coef = _build_dense(M, diag_m, X, gram, i, P, q)
    for a in range(X.shape[1]):
        x[a] = X[i, a]
    for _ in range(inner_steps):
        _inner_step(P, q, m_ii, s_coef, x, b)
    _apply_row(X, gram, diag_xxt, i, x)


@njit(cache=True, nogil=True)
def _update_row_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, i, inner_steps, P, q, b, x):
    m_ii, s_coef = _build_csr(indptr, indices, data, diag_m, X, gram, i, P, q)
    for a in range(X.shape[1]):
        x[a] = X[i, a]
    for _ in range(inner_steps):
        _inner_step(P, q, m_ii, s_coef, x, b)
    _apply_row(X, gram, diag_xxt, i, x)


@njit(cache=True, nogil=True)
def _sweep_dense(M, diag_m, X, gram, diag_xxt, order, inner_steps):
    r = X.shape[1]
    P = np.empty((r, r))
    q = np.empty(r)
    b = np.empty(r)
    x = np.empty(r)
    for t in range(order.shape[0]):
        _update_row_dense(M, diag_m, X, gram, diag_xxt, order[t], inner_steps, P, q, b, x)


@njit(cache=True, nogil=True)
def _sweep_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, order, inner_steps):
    r = X.shape[1]
    P = np.empty((r, r))
    q = np.empty(r)
    b = np.empty(r)
    x = np.empty(r)
    for t in range(order.shape[0]):
        _update_row_csr(indptr, indices, data, diag_m, X, gram, diag_xxt, order[t], inner_steps, P, q, b, x)


def _check_state(M: SimilarityMatrix, X: np.ndarray, cache: GramCache):
    n, r = X.shape
    if M.n != n:
        raise ValueError("X has %d rows but M is %d-by-%d" % (n, M.n, M.n))
    if cache.gram.shape != (r, r) or cache.diag_xxt.shape != (n,):
        raise ValueError("cache shapes do not match X")


def build_row_subproblem(M: SimilarityMatrix, X: np.ndarray, cache: GramCache, i: int) -> RowSubproblem:
    """Assemble (P, q, m_ii, S) for row i; built once per row visit."""
    _check_state(M, X, cache)
    n, r = X.shape
    if not 0 <= i < n:
        raise IndexError("row index %d out of range for n=%d" % (i, n))
    P = np.empty((r, r))
    q = np.empty(r)
    if M.is_sparse:
        indptr, indices, data = M.csr_arrays()
        m_ii, s_coef = _build_csr(indptr, indices, data, M.diagonal(), X, cache.gram, i, P, q)
    else:
        m_ii, s_coef = _build_dense(M.dense_array(), M.diagonal(), X, cache.gram, i, P, q)
    return RowSubproblem(i=i, P=P, q=q, m_ii=float(m_ii), s_coef=float(s_coef))


def inner_step(sub: RowSubproblem, x_cur: np.ndarray) -> np.ndarray:
    """One majorize-minimize step from x_cur; returns the new row."""
    x = np.array(x_cur, dtype=np.float64)
    r = sub.q.shape[0]
    if x.shape != (r,):
        raise ValueError("row has shape %r, expected (%d,)" % (x.shape, r))
    if (x < 0).any():
        raise ValueError("current row must be nonnegative")
    b = np.empty(r)
    _inner_step(sub.P, sub.q, sub.m_ii, sub.s_coef, x, b)
    return x


def update_row(
    M: SimilarityMatrix, X: np.ndarray, cache: GramCache, i: int, inner_steps: int = DEFAULT_INNER_STEPS
) -> np.ndarray:
    """Run inner_steps surrogate steps on row i in place; returns the new row."""
    _check_state(M, X, cache)
    n, r = X.shape
    if not 0 <= i < n:
        raise IndexError("row index %d out of range for n=%d" % (i, n))
    if inner_steps < 1:
        raise ValueError("inner_steps must be >= 1")
    P = np.empty((r, r))
    q = np.empty(r)
    b = np.empty(r)
    x = np.empty(r)
    if M.is_sparse:
        indptr, indices, data = M.csr_arrays()
        _update_row_csr(
            indptr, indices, data, M.diagonal(), X, cache.gram, cache.diag_xxt, i, inner_steps, P, q, b, x
        )
    else:
        _update_row_dense(
            M.dense_array(), M.diagonal(), X, cache.gram, cache.diag_xxt, i, inner_steps, P, q, b, x
        )
    return X[i].copy()


def sweep_vbsum(
    M: SimilarityMatrix,
    X: np.ndarray,
    cache: GramCache,
    order=None,
    inner_steps: int = DEFAULT_INNER_STEPS,
) -> None:
    """Run one sweep of row updates in the given row order (None = cyclic)."""
    _check_state(M, X, cache)
    n = X.shape[0]
    if inner_steps < 1:
        raise ValueError("inner_steps must be >= 1")
    if order is None:
        order = np.arange(n, dtype=np.int64)
    else:
        order = np.ascontiguousarray(order, dtype=np.int64)
        if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
            raise ValueError("order must be a permutation of range(%d)" % n)
    if M.is_sparse:
        indptr, indices, data = M.csr_arrays()
        _sweep_csr(indptr, indices, data, M.diagonal(), X, cache.gram, cache.diag_xxt, order, inner_steps)
    else:
        _sweep_dense(M.dense_array(), M.diagonal(), X, cache.gram, cache.diag_xxt, order, inner_steps)
