"""Gaussian orthant probabilities for quantized-observation likelihoods.

P(sign(z) = s) for z ~ N(mean, cov) is the probability mass of one orthant.
After flipping coordinates so every constraint reads z_i >= 0, a reordering
Cholesky factorization turns the integral into an expectation over the unit
cube (separation of variables), which is evaluated with scrambled Sobol
points.  Repeating the evaluation with independent scramblings gives an
error estimate alongside the value.  Coordinates with zero variance are
resolved exactly through the quantizer convention sign(0) = +1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

_SYM_TOL = 1e-12
_EIG_TOL = 1e-10
_RANDOMIZATIONS = 8
_BASE_POINTS_LOG2 = 13


@dataclass(frozen=True)
class GaussianSpec:
    """A mean vector with a symmetric positive-semidefinite covariance.

    Symmetry is required within 1e-12 (relative to the largest entry) and
    eigenvalues may be negative only by numerical dust, which is tolerated
    down to -1e-10; anything worse raises.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValueError("mean and covariance dimensions do not match")
        scale = max(1.0, float(np.abs(cov).max()) if d else 1.0)
        if np.abs(cov - cov.T).max(initial=0.0) > _SYM_TOL * scale:
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if d and np.linalg.eigvalsh(cov).min() < -_EIG_TOL * scale:
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.shape[0]


def std_normal_cdf(x):
    """Standard normal CDF, accurate to well below 1e-12 absolute error."""
    return ndtr(x)


def covariance_factor(cov):
    """Factor F with F F^T = cov for a PSD matrix.

    Uses the lower-triangular Cholesky square root when the matrix is
    positive definite; otherwise falls back to an eigendecomposition with
    negative eigenvalues clamped to zero.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def _entropy_tuple(seed):
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def _reorder_cholesky(cov, lower):
    """Cholesky factor with variables reordered for numerical conditioning.

    At every step the remaining variable with the smallest conditional
    orthant probability is pivoted to the front (conditioning on truncated
    expected values of the earlier variables), which is the standard way to
    stabilize the separation-of-variables integrand.  Zero pivots from a
    semidefinite covariance are kept as zero columns; the corresponding
    constraints become indicators inside the integrand.
    """
    d = len(lower)
    c = cov.copy()
    lo = np.asarray(lower, dtype=float).copy()
    fac = np.zeros((d, d))
    y = np.zeros(d)
    eps = _EIG_TOL * max(1.0, float(np.diag(cov).max()))
    for i in range(d):
        best_j, best_p = i, np.inf
        for j in range(i, d):
            s2 = c[j, j] - fac[j, :i] @ fac[j, :i]
            shift = lo[j] - fac[j, :i] @ y[:i]
            if s2 <= eps:
                p_j = 1.0 if shift <= 0.0 else 0.0
            else:
                p_j = ndtr(-shift / np.sqrt(s2))
            if p_j < best_p:
                best_p, best_j = p_j, j
        if best_j != i:
            for a in (c,):
                a[[i, best_j], :] = a[[best_j, i], :]
                a[:, [i, best_j]] = a[:, [best_j, i]]
            fac[[i, best_j], :] = fac[[best_j, i], :]
            lo[[i, best_j]] = lo[[best_j, i]]
        s2 = c[i, i] - fac[i, :i] @ fac[i, :i]
        if s2 > eps:
            fac[i, i] = np.sqrt(s2)
            if i + 1 < d:
                fac[i + 1 :, i] = (c[i + 1 :, i] - fac[i + 1 :, :i] @ fac[i, :i]) / fac[i, i]
            a = (lo[i] - fac[i, :i] @ y[:i]) / fac[i, i]
            if a > 30.0:
                y[i] = a + 1.0 / a
            else:
                y[i] = np.exp(-0.5 * a * a) / np.sqrt(2.0 * np.pi) / ndtr(-a)
    return fac, lo


def _cube_average(fac, lower, points):
    """Average of the separated integrand over one batch of cube points."""
    npts = points.shape[0]
    d = len(lower)
    f = np.ones(npts)
    y = np.zeros((npts, max(d - 1, 1)))
    for i in range(d):
        mu = y[:, :i] @ fac[i, :i]
        cii = fac[i, i]
        if cii > 0.0:
            di = ndtr((lower[i] - mu) / cii)
            fi = 1.0 - di
        else:
            fi = np.where(lower[i] - mu <= 0.0, 1.0, 0.0)
            di = 1.0 - fi
        f = f * fi
        if i < d - 1 and cii > 0.0:
            u = di + points[:, i] * fi
            y[:, i] = ndtri(np.clip(u, 1e-15, 1.0 - 1e-15))
    return float(f.mean())


def _qmc_probability(fac, lower, points_log2, seed):
    d = len(lower)
    children = np.random.SeedSequence(_entropy_tuple(seed) + (points_log2,)).spawn(_RANDOMIZATIONS)
    estimates = np.empty(_RANDOMIZATIONS)
    for r, child in enumerate(children):
        engine = qmc.Sobol(d=d - 1, scramble=True, seed=np.random.default_rng(child))
        estimates[r] = _cube_average(fac, lower, engine.random_base2(points_log2))
    value = float(np.clip(estimates.mean(), 0.0, 1.0))
    error = float(3.0 * estimates.std(ddof=1) / np.sqrt(_RANDOMIZATIONS))
    return value, error


def orthant_probability(spec, signs, accuracy=1e-5, seed=0, max_points_log2=16):
    """Probability that sign(z) equals ``signs`` elementwise, z ~ N(mean, cov).

    The quantizer maps 0 to +1, which decides coordinates of zero variance
    exactly.  Returns ``(probability, error_estimate)`` where the error
    estimate is about three standard errors across the Sobol scramblings,
    so it bounds the true error with high confidence.  The point budget
    starts at 2^13 per scrambling and doubles until the requested accuracy
    is met or ``max_points_log2`` is reached; if the target is unattainable
    the best estimate is returned with its honest error estimate.
    """
    s = np.atleast_1d(np.asarray(signs, dtype=int))
    mean, cov = spec.mean, spec.cov
    if s.shape != mean.shape or (s.size and not np.all(np.abs(s) == 1)):
        raise ValueError("signs must be a vector of +-1 matching the mean")
    flip = s.astype(float)
    m = flip * mean
    c = cov * np.outer(flip, flip)
    var = np.diag(c)
    vtol = _SYM_TOL * max(1.0, float(var.max()) if len(var) else 1.0)
    degenerate = var <= vtol
    if degenerate.any():
        decided = np.where(mean[degenerate] >= 0.0, 1, -1)
        if np.any(decided != s[degenerate]):
            return 0.0, 0.0
        keep = ~degenerate
        m = m[keep]
        c = c[np.ix_(keep, keep)]
    d = len(m)
    if d == 0:
        return 1.0, 0.0
    lower = -m
    if d == 1:
        return float(1.0 - ndtr(lower[0] / np.sqrt(c[0, 0]))), 0.0
    fac, lower = _reorder_cholesky(c, lower)
    points_log2 = _BASE_POINTS_LOG2
    while True:
        value, error = _qmc_probability(fac, lower, points_log2, seed)
        if error <= accuracy or points_log2 >= max_points_log2:
            return value, error
        points_log2 += 1


def sum_over_orthants(spec, accuracy=1e-5, seed=0):
    """Self test: total probability over all 2^d orthants and accumulated error."""
    d = spec.dim
    if d > 6:
        raise ValueError("orthant sum is a self test for d <= 6")
    total = 0.0
    err = 0.0
    for k, signs in enumerate(itertools.product((-1, 1), repeat=d)):
        p, e = orthant_probability(spec, signs, accuracy=accuracy, seed=_entropy_tuple(seed) + (k,))
        total += p
        err += e
    return total, err
