"""Normal-distribution special functions, noncentral chi-square(1) and bisection.

Probabilities that may underflow are available in log form (``*_log*``).
The standard normal CDF is delegated to ``scipy.special.ndtr`` and
``scipy.special.log_ndtr``, which are accurate far into both tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "TailBounds",
    "BracketError",
    "std_normal_pdf",
    "std_normal_logpdf",
    "std_normal_cdf",
    "std_normal_logcdf",
    "std_normal_sf",
    "std_normal_logsf",
    "log1mexp",
    "gaussian_tail_bounds",
    "noncentral_chisq1_cdf",
    "noncentral_chisq1_sf",
    "noncentral_chisq1_logcdf",
    "noncentral_chisq1_logsf",
    "bisect_root",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TailBounds:
    """Lower and upper bracket for the standard normal upper tail."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"invalid tail bounds: lower={self.lower}, upper={self.upper}")


class BracketError(ValueError):
    """Raised when a bisection bracket does not straddle a sign change."""


def _scalar_or_array(out):
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return float(out)
    return out


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(np.exp(-0.5 * x * x - _LOG_SQRT_2PI))


def std_normal_logpdf(x):
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(-0.5 * x * x - _LOG_SQRT_2PI)


def std_normal_cdf(x):
    return _scalar_or_array(special.ndtr(np.asarray(x, dtype=float)))


def std_normal_logcdf(x):
    return _scalar_or_array(special.log_ndtr(np.asarray(x, dtype=float)))


def std_normal_sf(x):
    """Upper tail ``1 - Phi(x)``, computed as ``Phi(-x)`` to keep precision."""
    return _scalar_or_array(special.ndtr(-np.asarray(x, dtype=float)))


def std_normal_logsf(x):
    return _scalar_or_array(special.log_ndtr(-np.asarray(x, dtype=float)))


def log1mexp(logp):
    """Return ``log(1 - exp(logp))`` for ``logp <= 0`` without cancellation."""
    logp = np.asarray(logp, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(
            logp > -math.log(2.0),
            np.log(-np.expm1(np.minimum(logp, 0.0))),
            np.log1p(-np.exp(np.minimum(logp, 0.0))),
        )
    return _scalar_or_array(out)


def gaussian_tail_bounds(t: float) -> TailBounds:
    """Mills-ratio bracket of ``1 - Phi(t)`` for ``t > 0``."""
    t = float(t)
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    ratio = std_normal_pdf(t) / t
    inv2 = 1.0 / (t * t)
    lower = max(1.0 - inv2, 0.0) * ratio
    upper = (1.0 - inv2 + 3.0 * inv2 * inv2) * ratio
    return TailBounds(lower=lower, upper=min(upper, 1.0))


def _check_chisq_args(t, lam):
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("noncentral chi-square argument t must be nonnegative")
    if np.any(lam < 0) or np.any(np.isnan(lam)):
        raise ValueError("noncentrality lambda must be nonnegative")
    return np.sqrt(t), np.sqrt(lam)


def noncentral_chisq1_cdf(t, lam):
    """CDF of ``(Z + sqrt(lam))**2`` at ``t``."""
    rt, rl = _check_chisq_args(t, lam)
    out = special.ndtr(rt - rl) - special.ndtr(-rt - rl)
    return _scalar_or_array(np.clip(out, 0.0, 1.0))


def noncentral_chisq1_sf(t, lam):
    rt, rl = _check_chisq_args(t, lam)
    out = special.ndtr(rl - rt) + special.ndtr(-rt - rl)
    return _scalar_or_array(np.clip(out, 0.0, 1.0))


def noncentral_chisq1_logsf(t, lam):
    rt, rl = _check_chisq_args(t, lam)
    return _scalar_or_array(np.logaddexp(special.log_ndtr(rl - rt), special.log_ndtr(-rt - rl)))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _log_normal_mass(mid, half):
    """``log(Phi(mid + half) - Phi(mid - half))`` by Gauss-Legendre quadrature; for short intervals."""
    x = mid[..., None] + half[..., None] * _GL_NODES
    with np.errstate(divide="ignore"):
        terms = np.log(_GL_WEIGHTS) - 0.5 * x * x - _LOG_SQRT_2PI
        return np.log(half) + special.logsumexp(terms, axis=-1)


def noncentral_chisq1_logcdf(t, lam):
    """Log CDF, accurate also when the CDF is tiny.

    A short interval ``[-sqrt(t), sqrt(t)]`` (relative to the shift) is
    integrated directly, since the difference of two CDF values would cancel.
    Otherwise the complement is used when the CDF exceeds one half.
    """
    rt, rl = _check_chisq_args(t, lam)
    rt, rl = np.broadcast_arrays(rt, rl)
    logsf = np.logaddexp(special.log_ndtr(rl - rt), special.log_ndtr(-rt - rl))
    hi = special.log_ndtr(rt - rl)
    lo = special.log_ndtr(-rt - rl)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = hi + log1mexp(np.minimum(lo - hi, 0.0))
    width = 2.0 * rt
    short = (width <= 1.0) & (width * rl <= 1.0)
    quad = _log_normal_mass(-rl, rt) if np.any(short) else direct
    out = np.where(short, quad, np.where(logsf < -math.log(2.0), log1mexp(logsf), direct))
    return _scalar_or_array(out)


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Bisection on ``[lo, hi]``; stops once the bracket is narrower than ``tol``.

    The iteration count is capped so termination does not depend on the
    function.  A bracket whose endpoints share a strict sign raises
    :class:`BracketError`.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo) has sign {math.copysign(1, flo):+.0f}, "
            f"f(hi) has sign {math.copysign(1, fhi):+.0f}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        fmid = float(f(mid))
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return 0.5 * (lo + hi)
