"""Shared test oracles.

Everything here recomputes quantities from first principles (full residual
matrices, grids, bisection, finite differences) so the library's cached /
closed-form paths are checked against independent arithmetic.
"""

import numpy as np

from symnmf import GramCache, SimilarityMatrix


def frobenius_objective(M_dense, X):
    """||M - X X^T||_F^2 by forming the full residual."""
    R = np.asarray(M_dense, dtype=np.float64) - X @ X.T
    return float(np.sum(R * R))


def random_symmetric(rng, n, scale=1.0, shift=0.0):
    """Dense symmetric matrix with entries of either sign."""
    A = scale * rng.standard_normal((n, n)) + shift
    return 0.5 * (A + A.T)


def random_state(rng, n, r, sparse=False):
    """Random (SimilarityMatrix, X >= 0, consistent GramCache) triple."""
    M = random_symmetric(rng, n, shift=0.5)
    if sparse:
        mask = rng.random((n, n)) < 0.4
        mask = mask | mask.T
        np.fill_diagonal(mask, True)
        M = np.where(mask, M, 0.0)
        sim = SimilarityMatrix.from_sparse(_to_csr(M))
    else:
        sim = SimilarityMatrix.from_dense(M)
    X = rng.random((n, r))
    X[rng.random((n, r)) < 0.2] = 0.0
    return sim, X, GramCache.from_factor(X)


def _to_csr(dense):
    import scipy.sparse

    return scipy.sparse.csr_matrix(dense)


def entry_quartic(b, c, d, x_ref, x):
    """Objective change when one entry moves from x_ref to x (exact quartic)."""
    u = np.asarray(x, dtype=np.float64) - x_ref
    return u * (d + u * (0.5 * c + u * (b / 3.0 + u)))


def entry_surrogate(b, c, d, x_ref, x):
    """entry_quartic plus the convexifying quadratic (curvature lift)."""
    c_lift = max(b * b / 12.0 - c, 0.0)
    u = np.asarray(x, dtype=np.float64) - x_ref
    return entry_quartic(b, c, d, x_ref, x) + 0.5 * c_lift * u * u


def entry_surrogate_derivative(b, c, d, x_ref, x):
    u = np.asarray(x, dtype=np.float64) - x_ref
    c_eff = max(c, b * b / 12.0)
    return 4.0 * u ** 3 + b * u ** 2 + c_eff * u + d


def grid_minimum(fn, lo, hi, points=10_000):
    """(argmin, min) of fn over an inclusive uniform grid."""
    xs = np.linspace(lo, hi, points)
    vals = fn(xs)
    k = int(np.argmin(vals))
    return float(xs[k]), float(vals[k])


def bisect_increasing(fn, lo, hi, iters=80):
    """Root of an increasing scalar function by bisection."""
    flo = fn(lo)
    if flo >= 0.0:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def central_difference(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def second_difference(fn, x, h=1e-4):
    return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h)


def row_objective(P, q, m_ii, x):
    """Row-restricted objective ||x||^4 + 2 x^T Q x - 4 q^T x, Q = P - m_ii I."""
    x = np.asarray(x, dtype=np.float64)
    Q = P - m_ii * np.eye(P.shape[0])
    return float(np.dot(x, x) ** 2 + 2.0 * x @ Q @ x - 4.0 * q @ x)


def row_surrogate(P, q, m_ii, s_coef, x_ref, x):
    """Lifted-curvature majorizer of row_objective, tight at x_ref."""
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    Q = P - m_ii * np.eye(P.shape[0])
    b = q + s_coef * x_ref - Q @ x_ref
    const = 2.0 * (s_coef * np.dot(x_ref, x_ref) - x_ref @ Q @ x_ref)
    return float(np.dot(x, x) ** 2 + 2.0 * s_coef * np.dot(x, x) - 4.0 * b @ x + const)
