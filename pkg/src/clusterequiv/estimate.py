"""Spectral estimation of a symmetric two-cluster mean from unlabeled rows."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenPair",
    "EigenConvergenceError",
    "SpectralFit",
    "second_moment",
    "top_eigenpair",
    "spectral_fit",
    "spectral_mean_estimate",
    "spectral_pair_estimate",
    "estimation_loss",
]


class EigenConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"power iteration did not converge: residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    iterations: int = 0
    residual: float = 0.0


@dataclass(frozen=True)
class SpectralFit:
    theta_hat: np.ndarray
    lambda1: float
    iterations: int
    residual: float
    clipped: bool


def second_moment(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] < 1:
        raise ValueError("need at least one row")
    m = x.T @ x / x.shape[0]
    return 0.5 * (m + m.T)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _power(m, shift, start, tol, max_iter):
    v = start / np.linalg.norm(start)
    lam, res = 0.0, math.inf
    for it in range(1, max_iter + 1):
        mv = m @ v
        lam = float(v @ mv)
        res = float(np.linalg.norm(mv - lam * v))
        if res <= tol * (abs(lam) + 1.0):
            return lam, v, it, res
        w = mv + shift * v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return lam, v, it, res
        v = w / norm
    return lam, v, max_iter, res


_START_SEED = 20_240_101


def top_eigenpair(m, tol: float = 1e-10, max_iter: int = 10_000) -> EigenPair:
    """Largest eigenvalue and its unit eigenvector by power iteration.

    The matrix is shifted by a Gershgorin bound so the algebraically largest
    eigenvalue dominates.  The first pass starts from a fixed pseudo-random
    vector, which is almost surely not orthogonal to the top eigenvector (a
    structured start such as all-ones can be an eigenvector of a smaller
    eigenvalue).  If it stalls, a second pass starts from the column of
    largest norm.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    p = m.shape[0]
    radius = np.sum(np.abs(m), axis=1) - np.abs(np.diag(m))
    shift = max(0.0, -float(np.min(np.diag(m) - radius)))

    starts = [np.random.default_rng(_START_SEED).standard_normal(p)]
    col = m[:, int(np.argmax(np.linalg.norm(m, axis=0)))]
    if np.linalg.norm(col) > 0:
        starts.append(col + 1e-3 * np.arange(1, p + 1) / p)
    total = 0
    res = math.inf
    for start in starts:
        lam, v, it, res = _power(m, shift, start, tol, max_iter)
        total += it
        if res <= tol * (abs(lam) + 1.0):
            return EigenPair(value=lam, vector=_fix_sign(v), iterations=total, residual=res)
    raise EigenConvergenceError(res, total)


def spectral_fit(x, tol: float = 1e-10, max_iter: int = 10_000) -> SpectralFit:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, p = x.shape
    if n < 2:
        raise ValueError("need at least two rows")
    if p > n:
        warnings.warn(f"dimension p={p} exceeds sample size n={n}; the estimate may be poor", RuntimeWarning)
    pair = top_eigenpair(second_moment(x), tol=tol, max_iter=max_iter)
    excess = pair.value - 1.0
    clipped = excess <= 0.0
    theta_hat = np.zeros(p) if clipped else math.sqrt(excess) * pair.vector
    return SpectralFit(theta_hat, pair.value, pair.iterations, pair.residual, clipped)


def spectral_mean_estimate(x) -> np.ndarray:
    """``sqrt((lambda_1 - 1)_+) u_1`` from the top eigenpair of the second moment."""
    return spectral_fit(x).theta_hat


def spectral_pair_estimate(sample) -> tuple[np.ndarray, np.ndarray]:
    """Estimate both mean vectors of a :class:`PairedSample` independently."""
    return spectral_mean_estimate(sample.x), spectral_mean_estimate(sample.y)


def estimation_loss(est, truth) -> float:
    est = np.asarray(est, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if est.shape != truth.shape:
        raise ValueError(f"dimension mismatch: {est.shape} vs {truth.shape}")
    return float(min(np.linalg.norm(est - truth), np.linalg.norm(est + truth)))
