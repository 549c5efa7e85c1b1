"""Contrast statistics, exact null survival functions and the higher-criticism engine.

Scales used throughout: for known norms ``a = |theta|`` and ``b = |eta|`` the
contrast ``C- = |a x - b y| - |a x + b y|`` lives on the ``log n`` scale, and
the survival function ``S_(r,s)(t)`` is the probability that
``C- > t * sqrt(2 log n)``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .model import PairedSample, ProjectedSample, calibrate_scales
from .numerics import (
    log1mexp,
    noncentral_chisq1_logcdf,
    noncentral_chisq1_logsf,
    std_normal_logcdf,
)

__all__ = [
    "SurvivalSpec",
    "HcRange",
    "HcDenominator",
    "HcDirection",
    "HcConfig",
    "Survival",
    "PairSurvival",
    "ChiSquare1Survival",
    "CallableSurvival",
    "TailRegime",
    "project",
    "c_minus",
    "c_plus",
    "pair_prob",
    "pair_log_prob",
    "survival_rs",
    "log_survival_rs",
    "survival_rs_function",
    "hc_sup",
    "hc_order_statistic_form",
    "llr_exact",
    "llr_approx",
    "tail_exponent_easy",
    "tail_exponent_comp0",
    "tail_exponent_comp1",
]


# --------------------------------------------------------------------------- projections


def project(sample: PairedSample, theta, eta) -> ProjectedSample:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if theta.shape[0] != sample.x.shape[1] or eta.shape[0] != sample.y.shape[1]:
        raise ValueError(
            f"direction dimensions ({theta.shape[0]}, {eta.shape[0]}) do not match "
            f"sample dimensions ({sample.x.shape[1]}, {sample.y.shape[1]})"
        )
    nt, ne = np.linalg.norm(theta), np.linalg.norm(eta)
    if not (nt > 0 and ne > 0):
        raise ValueError("projection directions must be nonzero")
    return ProjectedSample(sample.x @ (theta / nt), sample.y @ (eta / ne))


def c_minus(tx, ty, a: float, b: float):
    """``|a tx - b ty| - |a tx + b ty|``; large when the two signs disagree."""
    u = a * np.asarray(tx, dtype=float)
    v = b * np.asarray(ty, dtype=float)
    out = np.abs(u - v) - np.abs(u + v)
    return float(out) if out.ndim == 0 else out


def c_plus(tx, ty, a: float, b: float):
    u = a * np.asarray(tx, dtype=float)
    v = b * np.asarray(ty, dtype=float)
    out = np.abs(u + v) - np.abs(u - v)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- pair probability


@dataclass(frozen=True)
class SurvivalSpec:
    """Shifts ``(a1, b1)`` and weights ``(a2, b2)`` of ``C-(Z1 + a1, Z2 + b1, a2, b2)``."""

    a1: float
    b1: float
    a2: float
    b2: float
    n: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n}")
        if self.a2 == 0 or self.b2 == 0:
            raise ValueError("a2 and b2 must be nonzero")

    @property
    def root_2_log_n(self) -> float:
        return math.sqrt(2.0 * math.log(self.n))


def _pair_logs(spec: SurvivalSpec, t):
    """``(log S, log(1 - S))`` for ``S = P(C- > t sqrt(2 log n))``.

    ``C- = -2 sign(A B) min(|A|, |B|)`` with ``A = a2 (Z1 + a1)`` and
    ``B = b2 (Z2 + b1)``.  With ``h = |tau| / 2``, for ``tau >= 0`` the event
    is ``{A > h, B < -h} or {A < -h, B > h}``; for ``tau < 0`` the complement is
    ``{A >= h, B >= h} or {A <= -h, B <= -h}``.  Each branch is a disjoint sum
    of products of normal tails, evaluated in log space.
    """
    t = np.asarray(t, dtype=float)
    tau = t * spec.root_2_log_n
    h = 0.5 * np.abs(tau)
    alpha = math.copysign(1.0, spec.a2) * spec.a1
    beta = math.copysign(1.0, spec.b2) * spec.b1
    ka = h / abs(spec.a2)
    kb = h / abs(spec.b2)
    a_hi = std_normal_logcdf(alpha - ka)  # log P(A > h)
    a_lo = std_normal_logcdf(-alpha - ka)  # log P(A < -h)
    b_hi = std_normal_logcdf(beta - kb)
    b_lo = std_normal_logcdf(-beta - kb)
    opposite = np.logaddexp(a_hi + b_lo, a_lo + b_hi)
    same = np.logaddexp(a_hi + b_hi, a_lo + b_lo)
    nonneg = tau >= 0
    log_s = np.where(nonneg, opposite, log1mexp(np.minimum(same, 0.0)))
    log_c = np.where(nonneg, log1mexp(np.minimum(opposite, 0.0)), same)
    return log_s, log_c


def pair_log_prob(spec: SurvivalSpec, t):
    log_s, _ = _pair_logs(spec, t)
    return float(log_s) if np.ndim(log_s) == 0 else log_s


def pair_prob(spec: SurvivalSpec, t):
    """``P(C-(Z1 + a1, Z2 + b1, a2, b2) > t sqrt(2 log n))`` for standard normal ``Z1, Z2``."""
    out = np.exp(_pair_logs(spec, t)[0])
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- survival objects


class Survival:
    """A nonincreasing survival function with accurate logs of ``S`` and ``1 - S``."""

    def logs(self, t):
        raise NotImplementedError

    def __call__(self, t):
        out = np.exp(self.logs(t)[0])
        return float(out) if np.ndim(out) == 0 else out


class PairSurvival(Survival):
    def __init__(self, spec: SurvivalSpec):
        self.spec = spec

    def logs(self, t):
        return _pair_logs(self.spec, t)


class ChiSquare1Survival(Survival):
    """Upper tail of ``(Z + sqrt(lam))**2``."""

    def __init__(self, lam: float = 0.0):
        self.lam = float(lam)

    def logs(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return noncentral_chisq1_logsf(t, self.lam), noncentral_chisq1_logcdf(t, self.lam)


class CallableSurvival(Survival):
    """Adapter for a plain function returning ``S(t)``."""

    def __init__(self, fn: Callable):
        self.fn = fn

    def logs(self, t):
        s = np.asarray(np.vectorize(self.fn, otypes=[float])(np.asarray(t, dtype=float)))
        with np.errstate(divide="ignore"):
            return np.log(s), np.log1p(-s)


def _as_survival(survival) -> Survival:
    return survival if isinstance(survival, Survival) else CallableSurvival(survival)


def survival_rs_function(r: float, s: float, n: int) -> PairSurvival:
    a, b = calibrate_scales(n, r, s)
    return PairSurvival(SurvivalSpec(a, b, a, b, n))


def survival_rs(r: float, s: float, n: int, t):
    """Null survival of ``|sqrt(r) U + sqrt(s) V| - sqrt(r + s) |V|`` at ``t``."""
    return survival_rs_function(r, s, n)(t)


def log_survival_rs(r: float, s: float, n: int, t):
    out = survival_rs_function(r, s, n).logs(t)[0]
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- higher criticism


class HcRange(str, Enum):
    ALL_REAL = "all-real"
    POSITIVE_ONLY = "positive-only"
    BOUNDED_BY_LOG_N = "bounded-by-log-n"


class HcDenominator(str, Enum):
    S_ONE_MINUS_S = "s-one-minus-s"
    S_ONLY = "s-only"


class HcDirection(str, Enum):
    UPPER_TAIL_COUNT = "upper-tail-count"
    LOWER_TAIL_COUNT = "lower-tail-count"


@dataclass(frozen=True)
class HcConfig:
    """Threshold range, variance denominator and counting direction of an HC statistic.

    ``n`` is only consulted for the ``bounded-by-log-n`` range ``|t| <= log n``.
    """

    range: HcRange = HcRange.ALL_REAL
    denominator: HcDenominator = HcDenominator.S_ONE_MINUS_S
    direction: HcDirection = HcDirection.UPPER_TAIL_COUNT
    n: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "range", HcRange(self.range))
        object.__setattr__(self, "denominator", HcDenominator(self.denominator))
        object.__setattr__(self, "direction", HcDirection(self.direction))
        if self.range is HcRange.BOUNDED_BY_LOG_N and (self.n is None or self.n < 3):
            raise ValueError("bounded-by-log-n range needs n >= 3")

    def interval(self) -> tuple[float, float, bool]:
        """``(lo, hi, closed)``; finite ends are closed only for the bounded range."""
        if self.range is HcRange.ALL_REAL:
            return -math.inf, math.inf, False
        if self.range is HcRange.POSITIVE_ONLY:
            return 0.0, math.inf, False
        bound = math.log(self.n)
        return -bound, bound, True


def _hc_ratio(counts, log_p, log_q, m: int, use_q: bool):
    """``|count - m p| / sqrt(m p (1 - p))`` (or ``sqrt(m p)``) evaluated in log space."""
    log_den = 0.5 * (math.log(m) + log_p + (log_q if use_q else 0.0))
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        pos = counts > 0
        first = np.where(pos, np.exp(np.log(np.where(pos, counts, 1.0)) - log_den), 0.0)
        second = np.exp(math.log(m) + log_p - log_den)
        return np.abs(first - second)


def hc_sup(values, survival, cfg: HcConfig = HcConfig(), scale: float = 1.0) -> float:
    """Exact supremum of the HC ratio over thresholds ``t`` in ``cfg.range``.

    Counts are ``#{values > t * scale}`` (or ``#{values <= t * scale}`` for the
    lower-tail direction, compared with ``1 - S(t)``).  Between consecutive
    order statistics the count is constant and the ratio is monotone in
    ``S(t)``, so the supremum is attained as a one-sided limit at a sample point
    or at a finite end of the range; all of these are evaluated.  An open range
    end where ``S`` is 0 or 1 is a limit that is never attained and is skipped.
    """
    surv = _as_survival(survival)
    v = np.sort(np.asarray(values, dtype=float).reshape(-1)) / float(scale)
    m = v.size
    if m == 0:
        raise ValueError("values must be nonempty")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    lo, hi, closed = cfg.interval()
    upper = cfg.direction is HcDirection.UPPER_TAIL_COUNT
    use_q = cfg.denominator is HcDenominator.S_ONE_MINUS_S

    def tail_logs(t):
        log_s, log_c = surv.logs(t)
        return (log_s, log_c) if upper else (log_c, log_s)

    def counts_at(t, side: str):
        # side="right": count at t itself; side="left": limit from below
        if upper:
            return m - np.searchsorted(v, t, side="right" if side == "right" else "left")
        return np.searchsorted(v, t, side="right" if side == "right" else "left")

    best = 0.0
    cand = np.unique(v)
    at_point = (cand > lo if not closed else cand >= lo) & (cand <= hi if closed else cand < hi)
    left_ok = (cand > lo) & ((cand <= hi) if closed else (cand < hi))
    pts = cand[at_point | left_ok]
    if pts.size:
        log_p, log_q = tail_logs(pts)
        log_p, log_q = np.asarray(log_p), np.asarray(log_q)
        degenerate = np.isneginf(log_p) | (np.isneginf(log_q) if use_q else False)
        if np.any(degenerate):
            bad = pts[np.argmax(degenerate)]
            raise ValueError(f"survival is 0 or 1 at t={bad!r} inside the HC range")
        ap = at_point[at_point | left_ok]
        lp = left_ok[at_point | left_ok]
        right_vals = _hc_ratio(counts_at(pts, "right").astype(float), log_p, log_q, m, use_q)
        left_vals = _hc_ratio(counts_at(pts, "left").astype(float), log_p, log_q, m, use_q)
        if np.any(ap):
            best = max(best, float(np.max(right_vals[ap])))
        if np.any(lp):
            best = max(best, float(np.max(left_vals[lp])))

    for end in (lo, hi):
        if not math.isfinite(end):
            continue
        log_p, log_q = (float(x) for x in tail_logs(end))
        degenerate = math.isinf(log_p) or (use_q and math.isinf(log_q))
        if degenerate:
            if closed:
                raise ValueError(f"survival is 0 or 1 at the range end t={end!r}")
            continue
        count = float(counts_at(end, "right"))
        best = max(best, float(_hc_ratio(np.array([count]), log_p, log_q, m, use_q)[0]))
    # overflow only happens for astronomically small tail probabilities
    return min(best, sys.float_info.max)


def hc_order_statistic_form(pvalues) -> float:
    """``max_i sqrt(m) |i/m - p_(i)| / sqrt(p_(i))`` over sorted p-values."""
    p = np.sort(np.asarray(pvalues, dtype=float).reshape(-1))
    m = p.size
    if m == 0:
        raise ValueError("pvalues must be nonempty")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("p-values must lie in (0, 1]")
    i = np.arange(1, m + 1, dtype=float)
    return float(np.max(math.sqrt(m) * np.abs(i / m - p) / np.sqrt(p)))


# --------------------------------------------------------------------------- likelihood ratio


def llr_exact(u, v, r: float, s: float, n: int):
    """Log density ratio of the signal pair component over the null pair component."""
    log_n = math.log(n)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    signal = u * math.sqrt(2.0 * r * log_n) + v * math.sqrt(2.0 * s * log_n)
    shared = v * math.sqrt(2.0 * (r + s) * log_n)
    out = np.logaddexp(signal, -signal) - np.logaddexp(shared, -shared)
    return float(out) if out.ndim == 0 else out


def llr_approx(u, v, r: float, s: float, n: int):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = math.sqrt(2.0 * math.log(n)) * (
        np.abs(math.sqrt(r) * u + math.sqrt(s) * v) - math.sqrt(r + s) * np.abs(v)
    )
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- tail exponents


class TailRegime(str, Enum):
    FAR = "far"
    MIDDLE = "middle"
    BULK = "bulk"


def tail_exponent_easy(r: float, s: float, t: float, part: int = 2) -> tuple[float, TailRegime]:
    """Exponent of ``n`` in the tails of single-coordinate statistics.

    ``part=1``: lower tail ``P(U^2 <= 2 t log n)`` of a noncentral chi-square;
    regimes are ``MIDDLE`` (``0 < t < r``) and ``BULK``.
    ``part=2``: ``P(|U| - |V| > t sqrt(2 log n))`` with shifted ``U`` and ``V``.
    """
    if part == 1:
        if 0.0 < t < r:
            return (math.sqrt(r) - math.sqrt(t)) ** 2, TailRegime.MIDDLE
        return 0.0, TailRegime.BULK
    if part != 2:
        raise ValueError("part must be 1 or 2")
    rr, rs = math.sqrt(r), math.sqrt(s)
    if t > rr + rs:
        return (t - rr) ** 2 + s, TailRegime.FAR
    if t > rr - rs:
        return 0.5 * (t - rr + rs) ** 2, TailRegime.MIDDLE
    return 0.0, TailRegime.BULK


def tail_exponent_comp0(r: float, s: float, t: float) -> tuple[float, TailRegime]:
    """Exponent of the null tail of the combined statistic at ``t sqrt(2 log n)``."""
    cross = math.sqrt(s) * math.sqrt(r + s)
    big = r + s + cross
    small = r * (r + s) / big
    if t > big:
        return (t * t + r * (r + s)) / r, TailRegime.FAR
    if t > -small:
        return (t + small) ** 2 / (2.0 * small), TailRegime.MIDDLE
    return 0.0, TailRegime.BULK


def tail_exponent_comp1(r: float, s: float, t: float) -> tuple[float, TailRegime]:
    """Exponent of the tail of the combined statistic under the signal component."""
    cross = math.sqrt(s) * math.sqrt(r + s)
    big = r + s + cross
    small = r * (r + s) / big
    if t > big:
        return ((t - r) ** 2 + r * s) / r, TailRegime.FAR
    if t > small:
        return (t - small) ** 2 / (2.0 * small), TailRegime.MIDDLE
    return 0.0, TailRegime.BULK
