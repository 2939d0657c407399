"""Closed-form minimizers for the per-block surrogate problems.

Both solver engines reduce their block subproblems to cubic root finding:
the entry engine minimizes a quartic polynomial in one nonnegative scalar,
the row engine needs the positive root of a depressed cubic. Both are
solved in closed form with the real (signed) cube root; no iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# Treat a barely-negative discriminant as zero at this relative size; it can
# only arise from round-off because the convex branch has p > 0 analytically.
_DISC_RTOL = 1e-14
# Switch to the product-identity evaluation (u * v = -p/3) when the |p|^3/27
# term is this small against q^2/4; the naive difference of cube roots loses
# half the mantissa there.
_CANCEL_RTOL = 1e-8


@dataclass
class CubicCoefficients:
    """Coefficients of the quartic surrogate g(x) built around a reference
    entry value x_ref = b / (3 a):

        g(x) = a/4 (x - x_ref)^4 + b/3 (x - x_ref)^3 + c/2 (x - x_ref)^2 + d (x - x_ref)
    """

    a: float
    b: float
    c: float
    d: float


@njit(cache=True, nogil=True)
def _surrogate_root(a, b, c, d):
    third_b2 = b * b / (3.0 * a)
    if c > third_b2:
        # Strictly convex case: g' has a single real root, by Cardano.
        p = (3.0 * a * c - b * b) / (3.0 * a * a)
        q = (9.0 * a * b * c - 27.0 * a * a * d - 2.0 * b * b * b) / (27.0 * a * a * a)
        disc = 0.25 * q * q + p * p * p / 27.0
        if disc < 0.0:
            if disc >= -_DISC_RTOL * q * q:
                disc = 0.0
            else:
                raise ValueError("negative discriminant on the convex branch")
        s = np.sqrt(disc)
        p3 = p * p * p / 27.0
        q24 = 0.25 * q * q
        if q24 < _CANCEL_RTOL * p3:
            # Curvature-dominated: the two cube roots nearly negate each
            # other, so start from the linearized root q/p and polish with
            # Newton on the monotone cubic (derivative >= p > 0).
            w = q / p
            w -= (w * w * w + p * w - q) / (3.0 * w * w + p)
            w -= (w * w * w + p * w - q) / (3.0 * w * w + p)
        elif p3 < _CANCEL_RTOL * q24:
            u = np.cbrt(0.5 * q + s) if q >= 0.0 else np.cbrt(0.5 * q - s)
            w = u - p / (3.0 * u)
        else:
            w = np.cbrt(0.5 * q - s) + np.cbrt(0.5 * q + s)
    else:
        # c was clamped up to b^2/(3a): the shifted cubic is a perfect cube.
        w = np.cbrt(b * b * b / (27.0 * a * a * a) - d / a)
    return w if w > 0.0 else 0.0


@njit(cache=True, nogil=True)
def _depressed_root(s_coef, beta):
    # Positive root of t^3 + s_coef * t - beta = 0 with s_coef, beta >= 0.
    disc = 0.25 * beta * beta + s_coef * s_coef * s_coef / 27.0
    root = np.sqrt(disc)
    s3 = s_coef * s_coef * s_coef / 27.0
    b24 = 0.25 * beta * beta
    if b24 < _CANCEL_RTOL * s3:
        # Curvature-dominated: the naive sum cancels catastrophically, so
        # start from the linearized root beta/s and polish with Newton on
        # the monotone cubic (derivative >= s > 0).
        t = beta / s_coef
        t -= (t * t * t + s_coef * t - beta) / (3.0 * t * t + s_coef)
        t -= (t * t * t + s_coef * t - beta) / (3.0 * t * t + s_coef)
    elif s_coef > 0.0 and s3 < _CANCEL_RTOL * b24:
        u = np.cbrt(0.5 * beta + root)
        t = u - s_coef / (3.0 * u)
    else:
        t = np.cbrt(0.5 * beta - root) + np.cbrt(0.5 * beta + root)
    return t if t > 0.0 else 0.0


def signed_cbrt(x: float) -> float:
    """Real cube root, defined for negative arguments (signed_cbrt(-8) == -2)."""
    return float(np.cbrt(x))


def solve_entry_surrogate(coeffs: CubicCoefficients) -> float:
    """Minimize the convexified quartic surrogate over x >= 0.

    Expects a > 0 and finite coefficients. A quadratic term lifting the
    curvature to at least b^2/(3a) is implied whenever c falls below that
    threshold, so raw c is accepted; the closed form on that branch does
    not involve c. Returns the unique nonnegative minimizer.
    """
    a, b, c, d = float(coeffs.a), float(coeffs.b), float(coeffs.c), float(coeffs.d)
    for v in (a, b, c, d):
        if not math.isfinite(v):
            raise ValueError("non-finite surrogate coefficient")
    if a <= 0.0:
        raise ValueError("leading coefficient must be positive, got %g" % a)
    return float(_surrogate_root(a, b, c, d))


def solve_depressed_cubic(s_coef: float, beta: float) -> float:
    """Unique nonnegative root t of t^3 + s_coef * t = beta.

    Requires s_coef >= 0 and beta >= 0; the cubic is increasing on t >= 0,
    so the root is unique and t = 0 exactly when beta = 0.
    """
    s_coef = float(s_coef)
    beta = float(beta)
    if not (math.isfinite(s_coef) and math.isfinite(beta)):
        raise ValueError("non-finite cubic coefficient")
    if s_coef < 0.0 or beta < 0.0:
        raise ValueError("coefficients must be nonnegative, got s=%g beta=%g" % (s_coef, beta))
    return float(_depressed_root(s_coef, beta))
