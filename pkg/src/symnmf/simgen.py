"""Synthetic instance generators and the scale-matched random initializer.

Two families:
    ck  -- noisy Gramian of a sparse nonnegative data matrix (dense output)
    sgk -- self-tuned Gaussian kernel on random points, kNN-sparsified and
           symmetrically normalized (CSR output)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse

from .core import SimilarityMatrix

DEFAULT_NOISE_SIGMA = 0.1
DEFAULT_SCALE_NEIGHBOR = 7

METHODS = ("ck", "sgk")


@dataclass
class GeneratorSpec:
    method: str
    n: int
    r: int
    m: Optional[int] = None  # data dimension; defaults to r
    sparsity: float = 0.0  # ck: fraction of data entries zeroed
    noise_sigma: float = DEFAULT_NOISE_SIGMA  # ck only
    knn_k: Optional[int] = None  # sgk: defaults to floor(log2 n) + 1
    scale_neighbor: int = DEFAULT_SCALE_NEIGHBOR  # sgk self-tuning index
    rng_seed: int = 0

    def validate(self):
        if self.method not in METHODS:
            raise ValueError("unknown method %r; expected one of %r" % (self.method, METHODS))
        if self.n < 1 or self.r < 1:
            raise ValueError("n and r must be positive")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be positive")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError("sparsity must be in [0, 1)")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")
        if self.scale_neighbor < 1:
            raise ValueError("scale_neighbor must be >= 1")
        if self.knn_k is not None and self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")

    @property
    def data_dim(self) -> int:
        return self.r if self.m is None else self.m


def _exponential_unit_mean(rng: np.random.Generator, shape) -> np.ndarray:
    # Inverse-CDF sampling keeps the draw reproducible across platforms:
    # u in [0, 1) makes 1 - u in (0, 1], so the log never sees zero.
    u = rng.random(shape)
    return -np.log1p(-u)


def generate_ck(spec: GeneratorSpec):
    """Noisy Gramian instance; returns (SimilarityMatrix, X_data).

    X_data is n-by-m with a `sparsity` fraction of entries zeroed and the
    rest unit-mean exponential; M = X_data X_data^T plus a symmetrized
    Gaussian perturbation (exactly PSD when noise_sigma == 0).
    """
    spec.validate()
    if spec.method != "ck":
        raise ValueError("generate_ck called with method %r" % spec.method)
    n, m = spec.n, spec.data_dim
    rng = np.random.default_rng(spec.rng_seed)
    X_data = _exponential_unit_mean(rng, (n, m))
    zeros = int(round(spec.sparsity * n * m))
    if zeros:
        flat = rng.permutation(n * m)[:zeros]
        X_data.reshape(-1)[flat] = 0.0
    M = X_data @ X_data.T
    M = 0.5 * (M + M.T)  # force exact symmetry; BLAS output may be off by ulps
    if spec.noise_sigma > 0.0:
        N = spec.noise_sigma * rng.standard_normal((n, n))
        M = M + (spec.noise_sigma / 2.0) * (N + N.T)
    return SimilarityMatrix.from_dense(M), X_data


def generate_sgk(spec: GeneratorSpec) -> SimilarityMatrix:
    """Normalized self-tuned Gaussian kernel on random exponential points.

    A_ij = exp(-||x_i - x_j||^2 / (sigma_i sigma_j)) with sigma_i the
    distance to the scale_neighbor-th nearest neighbor; entries survive
    sparsification when either endpoint is among the other's knn_k nearest
    neighbors; the result is D^{-1/2} A D^{-1/2} in CSR form.
    """
    spec.validate()
    if spec.method != "sgk":
        raise ValueError("generate_sgk called with method %r" % spec.method)
    n, m = spec.n, spec.data_dim
    knn_k = spec.knn_k if spec.knn_k is not None else int(math.log2(n)) + 1
    if spec.scale_neighbor > n - 1:
        raise ValueError("scale_neighbor=%d needs at least %d points, got n=%d"
                         % (spec.scale_neighbor, spec.scale_neighbor + 1, n))
    if knn_k > n - 1:
        raise ValueError("knn_k=%d needs at least %d points, got n=%d" % (knn_k, knn_k + 1, n))
    rng = np.random.default_rng(spec.rng_seed)
    pts = _exponential_unit_mean(rng, (n, m))
    sq = np.einsum("ij,ij->i", pts, pts)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T), 0.0)
    np.fill_diagonal(d2, 0.0)
    order = np.argsort(d2, axis=1, kind="stable")  # column 0 is the point itself
    sigma = np.sqrt(d2[np.arange(n), order[:, spec.scale_neighbor]])
    dup = np.flatnonzero(sigma == 0.0)
    if dup.size:
        raise ValueError("duplicate points: sigma is zero at index %d" % int(dup[0]))
    A = np.exp(-d2 / np.outer(sigma, sigma))
    keep = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), knn_k)
    keep[rows, order[:, 1 : knn_k + 1].reshape(-1)] = True
    keep |= keep.T
    A = np.where(keep, A, 0.0)
    np.fill_diagonal(A, 0.0)
    inv_sqrt_deg = 1.0 / np.sqrt(A.sum(axis=1))
    A *= np.outer(inv_sqrt_deg, inv_sqrt_deg)
    return SimilarityMatrix.from_sparse(scipy.sparse.csr_matrix(A))


def generate(spec: GeneratorSpec) -> SimilarityMatrix:
    """Generate M for either method (discarding ck's data matrix)."""
    if spec.method == "ck":
        return generate_ck(spec)[0]
    return generate_sgk(spec)


def initialize(M: SimilarityMatrix, r: int, seed: int = 0) -> np.ndarray:
    """Uniform random factor rescaled so ||alpha X0 X0^T|| best matches M.

    The optimal scale alpha = <M, X0 X0^T> / ||X0 X0^T||^2 is clamped at
    zero so the factor stays nonnegative.
    """
    if r < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    X0 = rng.random((M.n, r))
    gram = X0.T @ X0
    den = float(np.sum(gram * gram))
    if den < 1e-300:
        return X0
    num = float(np.einsum("ij,ij->", M.matmul(X0), X0))
    alpha = max(num / den, 0.0)
    return np.sqrt(alpha) * X0
