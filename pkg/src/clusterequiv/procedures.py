"""Tests of whether two label vectors agree, with known or estimated mean vectors.

Every procedure returns a :class:`TestReport`.  Label switching is handled by
computing one statistic per orientation (``minus``: labels disagree, ``plus``:
labels agree after a global flip) and rejecting only when both are large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .boundaries import t_star
from .estimate import EigenConvergenceError, spectral_pair_estimate
from .model import ModelParams, PairedSample, ProjectedSample, hamming_loss, scales_to_rs
from .stats import (
    ChiSquare1Survival,
    HcConfig,
    HcDenominator,
    HcDirection,
    HcRange,
    Survival,
    c_minus,
    c_plus,
    hc_order_statistic_form,
    hc_sup,
    project,
    survival_rs_function,
)

__all__ = [
    "TestReport",
    "SplitPartition",
    "Estimator",
    "hc_threshold",
    "test_equal_diff",
    "test_equal_sum",
    "test_equal_comb",
    "test_general_hc",
    "test_bonferroni",
    "test_estimation_baseline",
    "split_two",
    "split_three",
    "test_ada_bonferroni",
    "test_ada_hc",
    "ada_hc_statistics",
]

Estimator = Callable[[PairedSample], tuple[np.ndarray, np.ndarray]]

_MAX_SPLIT_RETRIES = 16


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    reject: bool
    statistic_minus: float
    statistic_plus: float
    threshold: float
    method: str
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "reject": bool(self.reject),
            "statistic_minus": float(self.statistic_minus),
            "statistic_plus": float(self.statistic_plus),
            "threshold": float(self.threshold),
            "meta": {k: (v if isinstance(v, (bool, str)) or v is None else float(v)) for k, v in self.meta.items()},
        }


def _min_report(method, minus, plus, threshold, **meta) -> TestReport:
    return TestReport(
        reject=bool(min(minus, plus) > threshold),
        statistic_minus=float(minus),
        statistic_plus=float(plus),
        threshold=float(threshold),
        method=method,
        meta=meta,
    )


def hc_threshold(n: int, delta: float) -> float:
    """``sqrt(2 (1 + delta) log log n)``."""
    if n < 3:
        raise ValueError(f"n must be at least 3 so that log log n > 0, got {n}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return math.sqrt(2.0 * (1.0 + delta) * math.log(math.log(n)))


class _RescaledSurvival(Survival):
    def __init__(self, base: Survival, factor: float):
        self.base = base
        self.factor = factor

    def logs(self, t):
        return self.base.logs(self.factor * np.asarray(t, dtype=float))


# --------------------------------------------------------------------------- ideal tests


def test_equal_diff(proj: ProjectedSample, delta: float = 1.0) -> TestReport:
    """HC on ``(x -/+ y)^2 / 2`` against the central chi-square(1) tail."""
    n = proj.n
    thr = hc_threshold(n, delta)
    cfg = HcConfig(HcRange.POSITIVE_ONLY, HcDenominator.S_ONE_MINUS_S, HcDirection.UPPER_TAIL_COUNT)
    surv = ChiSquare1Survival(0.0)
    minus = hc_sup((proj.x - proj.y) ** 2 / 2.0, surv, cfg)
    plus = hc_sup((proj.x + proj.y) ** 2 / 2.0, surv, cfg)
    return _min_report("diff", minus, plus, thr, delta=delta, n=n)


def test_equal_sum(proj: ProjectedSample, theta_norm: float, delta: float = 1.0) -> TestReport:
    """HC on ``(x +/- y)^2 / 2`` counted from below against a noncentral chi-square(1) CDF.

    The noncentrality is ``2 |theta|^2``; the centring is ``n`` times the CDF.
    ``statistic_plus`` uses the sums, which are shifted under agreeing labels.
    """
    if not theta_norm > 0:
        raise ValueError("theta_norm must be positive")
    n = proj.n
    thr = hc_threshold(n, delta)
    cfg = HcConfig(HcRange.POSITIVE_ONLY, HcDenominator.S_ONE_MINUS_S, HcDirection.LOWER_TAIL_COUNT)
    surv = ChiSquare1Survival(2.0 * theta_norm**2)
    plus = hc_sup((proj.x + proj.y) ** 2 / 2.0, surv, cfg)
    minus = hc_sup((proj.x - proj.y) ** 2 / 2.0, surv, cfg)
    return _min_report("sum", minus, plus, thr, delta=delta, n=n, theta_norm=theta_norm)


def test_equal_comb(proj: ProjectedSample, theta_norm: float, delta: float = 1.0) -> TestReport:
    """HC on ``(|x - y| - |x + y|) / sqrt(2)`` and its negation under equal norms."""
    if not theta_norm > 0:
        raise ValueError("theta_norm must be positive")
    n = proj.n
    thr = hc_threshold(n, delta)
    r = theta_norm**2 / math.log(n)
    # S(t) = P(|U| - |V| > t) equals S_(r,0)(sqrt(r) t)
    surv = _RescaledSurvival(survival_rs_function(r, 0.0, n), math.sqrt(r))
    cfg = HcConfig(HcRange.ALL_REAL, HcDenominator.S_ONE_MINUS_S, HcDirection.UPPER_TAIL_COUNT)
    contrast = (np.abs(proj.x - proj.y) - np.abs(proj.x + proj.y)) / math.sqrt(2.0)
    minus = hc_sup(contrast, surv, cfg)
    plus = hc_sup(-contrast, surv, cfg)
    return _min_report("comb", minus, plus, thr, delta=delta, n=n, r=r, theta_norm=theta_norm)


def test_general_hc(sample: PairedSample, params: ModelParams, delta: float = 1.0) -> TestReport:
    n = sample.n
    thr = hc_threshold(n, delta)
    proj = project(sample, params.theta, params.eta)
    a, b = params.norms
    r, s = scales_to_rs(a, b, n)
    scale = math.sqrt(2.0 * math.log(n))
    surv = survival_rs_function(r, s, n)
    cfg = HcConfig(HcRange.ALL_REAL, HcDenominator.S_ONE_MINUS_S, HcDirection.UPPER_TAIL_COUNT)
    minus = hc_sup(c_minus(proj.x, proj.y, a, b), surv, cfg, scale=scale)
    plus = hc_sup(c_plus(proj.x, proj.y, a, b), surv, cfg, scale=scale)
    return _min_report("general", minus, plus, thr, delta=delta, n=n, r=r, s=s)


def test_bonferroni(sample: PairedSample, params: ModelParams) -> TestReport:
    """Reject exact equality when both maximal contrasts exceed ``2 t*(r, s) log n``."""
    n = sample.n
    proj = project(sample, params.theta, params.eta)
    a, b = params.norms
    r, s = scales_to_rs(a, b, n)
    thr = 2.0 * t_star(r, s) * math.log(n)
    minus = float(np.max(c_minus(proj.x, proj.y, a, b)))
    plus = float(np.max(c_plus(proj.x, proj.y, a, b)))
    return _min_report("bonferroni", minus, plus, thr, n=n, r=r, s=s)


def test_estimation_baseline(sample: PairedSample, params: ModelParams, epsilon: float) -> TestReport:
    """Estimate both label vectors by projection signs and compare their loss with ``epsilon / 2``.

    The report carries the estimated loss in both statistic fields.
    """
    proj = project(sample, params.theta, params.eta)
    z_hat = np.where(proj.x >= 0, 1, -1)
    sigma_hat = np.where(proj.y >= 0, 1, -1)
    loss = hamming_loss(z_hat, sigma_hat)
    thr = 0.5 * float(epsilon)
    return TestReport(
        reject=bool(loss > thr),
        statistic_minus=loss,
        statistic_plus=loss,
        threshold=thr,
        method="estimation",
        meta={"n": sample.n, "epsilon": float(epsilon)},
    )


# --------------------------------------------------------------------------- data splitting


@dataclass(frozen=True)
class SplitPartition:
    parts: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(np.asarray(p, dtype=np.intp) for p in self.parts))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(p.size) for p in self.parts)


def _split(n: int, k: int, rng: np.random.Generator) -> SplitPartition:
    if int(n) != n or n < 6:
        raise ValueError(f"splitting needs n >= 6, got {n}")
    for _ in range(_MAX_SPLIT_RETRIES):
        d = rng.integers(0, k, size=int(n))
        parts = tuple(np.flatnonzero(d == j) for j in range(k))
        if all(p.size for p in parts):
            return SplitPartition(parts)
    raise RuntimeError(f"could not draw a {k}-way split with nonempty parts in {_MAX_SPLIT_RETRIES} tries")


def split_two(n: int, rng: np.random.Generator) -> SplitPartition:
    return _split(n, 2, rng)


def split_three(n: int, rng: np.random.Generator) -> SplitPartition:
    return _split(n, 3, rng)


# --------------------------------------------------------------------------- adaptive tests


def _estimate(estimator: Estimator | None, sample: PairedSample):
    est = spectral_pair_estimate if estimator is None else estimator
    theta_hat, eta_hat = est(sample)
    return np.asarray(theta_hat, dtype=float).reshape(-1), np.asarray(eta_hat, dtype=float).reshape(-1)


def _failed(method: str, threshold: float, reason: str, **meta) -> TestReport:
    return TestReport(False, 0.0, 0.0, threshold, method, {"failure": reason, **meta})


def test_ada_bonferroni(
    sample: PairedSample,
    estimator: Estimator | None = None,
    rng: np.random.Generator | None = None,
) -> TestReport:
    """Cross-fitted Bonferroni test with estimated mean vectors on a two-way split."""
    rng = np.random.default_rng() if rng is None else rng
    n = sample.n
    log_n = math.log(n)
    split = split_two(n, rng)
    halves = [sample.subset(p) for p in split.parts]
    try:
        fits = [_estimate(estimator, h) for h in halves]
    except EigenConvergenceError as exc:
        return _failed("ada-bonf", math.inf, str(exc), n=n)

    t_hats = []
    for theta_hat, eta_hat in fits:
        na, nb = np.linalg.norm(theta_hat), np.linalg.norm(eta_hat)
        if not (na > 0 and nb > 0):
            return _failed("ada-bonf", math.inf, "estimated mean vector is zero", n=n)
        t_hats.append(t_star(*scales_to_rs(na, nb, n)))
    t_hat = 0.5 * (t_hats[0] + t_hats[1])
    thr = 2.0 * (1.0 + 1.0 / math.sqrt(log_n)) * t_hat * log_n

    minus, plus = [], []
    for m in (0, 1):
        theta_hat, eta_hat = fits[1 - m]
        u = halves[m].x @ theta_hat
        v = halves[m].y @ eta_hat
        minus.append(float(np.max(np.abs(u - v) - np.abs(u + v))))
        plus.append(float(np.max(np.abs(u + v) - np.abs(u - v))))

    d_theta = float(np.linalg.norm(fits[0][0] - fits[1][0]))
    d_eta = float(np.linalg.norm(fits[0][1] - fits[1][1]))
    aligned = (d_theta <= 1.0) == (d_eta <= 1.0)
    if aligned:
        c_min, c_pl = max(minus[0], minus[1]), max(plus[0], plus[1])
    else:
        c_min, c_pl = max(minus[0], plus[1]), max(plus[0], minus[1])
    return _min_report(
        "ada-bonf", c_min, c_pl, thr,
        n=n, t_hat=t_hat, split0=split.sizes[0], split1=split.sizes[1],
        d_theta=d_theta, d_eta=d_eta, aligned=aligned,
    )


@dataclass(frozen=True)
class _AdaHcPieces:
    minus_values: np.ndarray
    plus_values: np.ndarray
    survival: Survival
    r_hat: float
    s_hat: float
    a_hat: float
    b_hat: float
    sizes: tuple


def _ada_hc_pieces(sample, estimator, rng):
    n = sample.n
    split = split_three(n, rng)
    d0, d1, d2 = split.parts
    theta_hat, eta_hat = _estimate(estimator, sample.subset(d0))
    nt, ne = np.linalg.norm(theta_hat), np.linalg.norm(eta_hat)
    if not (nt > 0 and ne > 0):
        return None, split, "estimated mean vector is zero"
    x_hat = sample.x @ (theta_hat / nt)
    y_hat = sample.y @ (eta_hat / ne)
    a_hat = math.sqrt(max(float(np.mean(x_hat[d1] ** 2)) - 1.0, 0.0))
    b_hat = math.sqrt(max(float(np.mean(y_hat[d1] ** 2)) - 1.0, 0.0))
    if not (a_hat > 0 and b_hat > 0):
        return None, split, "estimated projected scale is zero"
    r_hat, s_hat = scales_to_rs(a_hat, b_hat, n)
    scale = math.sqrt(2.0 * math.log(n))
    minus = c_minus(x_hat[d2], y_hat[d2], a_hat, b_hat) / scale
    plus = c_plus(x_hat[d2], y_hat[d2], a_hat, b_hat) / scale
    surv = survival_rs_function(r_hat, s_hat, n)
    return _AdaHcPieces(minus, plus, surv, r_hat, s_hat, a_hat, b_hat, split.sizes), split, None


def ada_hc_statistics(
    sample: PairedSample,
    estimator: Estimator | None = None,
    rng: np.random.Generator | None = None,
) -> dict:
    """Both evaluations of the adaptive HC statistics on one split.

    Returns the exact suprema, the order-statistic forms built from the
    per-observation p-values, and whether every scaled contrast lies within
    ``log n`` in absolute value.
    """
    rng = np.random.default_rng() if rng is None else rng
    pieces, _, reason = _ada_hc_pieces(sample, estimator, rng)
    if pieces is None:
        raise ValueError(reason)
    n = sample.n
    cfg = HcConfig(HcRange.BOUNDED_BY_LOG_N, HcDenominator.S_ONLY, HcDirection.UPPER_TAIL_COUNT, n=n)
    out = {
        "sup_minus": hc_sup(pieces.minus_values, pieces.survival, cfg),
        "sup_plus": hc_sup(pieces.plus_values, pieces.survival, cfg),
        "pvalue_minus": hc_order_statistic_form(pieces.survival(pieces.minus_values)),
        "pvalue_plus": hc_order_statistic_form(pieces.survival(pieces.plus_values)),
        "guard": bool(max(np.max(np.abs(pieces.minus_values)), np.max(np.abs(pieces.plus_values))) <= math.log(n)),
    }
    return out


def test_ada_hc(
    sample: PairedSample,
    estimator: Estimator | None = None,
    rng: np.random.Generator | None = None,
) -> TestReport:
    """Adaptive HC test on a three-way split with threshold ``(log n)^3``."""
    rng = np.random.default_rng() if rng is None else rng
    n = sample.n
    if n < 9:
        raise ValueError(f"the adaptive HC test needs n >= 9, got {n}")
    thr = math.log(n) ** 3
    try:
        pieces, split, reason = _ada_hc_pieces(sample, estimator, rng)
    except EigenConvergenceError as exc:
        return _failed("ada-hc", thr, str(exc), n=n)
    if pieces is None:
        return TestReport(False, 0.0, 0.0, thr, "ada-hc", {"n": n, "degenerate": True, "failure": reason})
    cfg = HcConfig(HcRange.BOUNDED_BY_LOG_N, HcDenominator.S_ONLY, HcDirection.UPPER_TAIL_COUNT, n=n)
    minus = hc_sup(pieces.minus_values, pieces.survival, cfg)
    plus = hc_sup(pieces.plus_values, pieces.survival, cfg)
    return _min_report(
        "ada-hc", minus, plus, thr,
        n=n, r_hat=pieces.r_hat, s_hat=pieces.s_hat, a_hat=pieces.a_hat, b_hat=pieces.b_hat,
        split0=pieces.sizes[0], split1=pieces.sizes[1], split2=pieces.sizes[2], degenerate=False,
    )
