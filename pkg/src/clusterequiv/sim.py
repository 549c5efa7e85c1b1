"""Seeded Monte Carlo harness for size, power, risk and phase-diagram sweeps.

Each unit of work (cell, label configuration, replicate) draws from its own
generator seeded by ``SeedSequence(seed, spawn_key=(cell, config, replicate))``,
and results are reduced in task order, so outputs do not depend on the number
of worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .boundaries import beta_star_general
from .model import (
    Calibration,
    Hypothesis,
    LabelPair,
    ModelParams,
    PairedSample,
    alternative_flips,
    gen_label_config,
    gen_mixture_pair,
    gen_paired_sample,
    random_params,
)
from .procedures import (
    TestReport,
    test_ada_bonferroni,
    test_ada_hc,
    test_bonferroni,
    test_equal_comb,
    test_equal_diff,
    test_equal_sum,
    test_estimation_baseline,
    test_general_hc,
)
from .stats import project

__all__ = [
    "METHODS",
    "LabelConfig",
    "RiskEstimate",
    "PhaseGrid",
    "MaxStatSummary",
    "run_method",
    "child_rng",
    "estimate_risk",
    "phase_sweep",
    "max_stat_diagnostic",
    "mc_survival",
]

Procedure = Callable[[PairedSample, ModelParams, Calibration, np.random.Generator, float], TestReport]


def _diff(sample, params, cal, rng, delta):
    return test_equal_diff(project(sample, params.theta, params.eta), delta)


def _sum(sample, params, cal, rng, delta):
    return test_equal_sum(project(sample, params.theta, params.eta), params.norms[0], delta)


def _comb(sample, params, cal, rng, delta):
    return test_equal_comb(project(sample, params.theta, params.eta), params.norms[0], delta)


def _general(sample, params, cal, rng, delta):
    return test_general_hc(sample, params, delta)


def _bonferroni(sample, params, cal, rng, delta):
    return test_bonferroni(sample, params)


def _estimation(sample, params, cal, rng, delta):
    return test_estimation_baseline(sample, params, cal.epsilon)


def _ada_bonf(sample, params, cal, rng, delta):
    return test_ada_bonferroni(sample, None, rng)


def _ada_hc(sample, params, cal, rng, delta):
    return test_ada_hc(sample, None, rng)


METHODS: dict[str, Procedure] = {
    "diff": _diff,
    "sum": _sum,
    "comb": _comb,
    "general": _general,
    "bonferroni": _bonferroni,
    "estimation": _estimation,
    "ada-bonf": _ada_bonf,
    "ada-hc": _ada_hc,
}


def run_method(method: str, sample, params, cal, rng, delta: float = 1.0) -> TestReport:
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    return fn(sample, params, cal, rng, delta)


class LabelConfig:
    """Canonical label configurations approximating the worst case."""

    SAME = 0
    SWITCHED = 1
    FLIPS = 2
    NEAR_SWITCH = 3

    NULL = (SAME, SWITCHED)
    ALTERNATIVE = (FLIPS, NEAR_SWITCH)


def child_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class _Task:
    cal: Calibration
    dims: tuple
    method: object
    config: int
    m_flips: int
    delta: float
    seed: int
    cell: int
    rep: int


def _labels_for(config: int, n: int, m_flips: int, rng) -> LabelPair:
    if config in LabelConfig.NULL:
        lp = gen_label_config(n, 0, rng)
    else:
        lp = gen_label_config(n, m_flips, rng)
    if config in (LabelConfig.SWITCHED, LabelConfig.NEAR_SWITCH):
        lp = LabelPair(lp.z, -lp.sigma)
    return lp


def _run_task(task: _Task) -> bool:
    rng = child_rng(task.seed, task.cell, task.config, task.rep)
    a, b = task.cal.scales
    params = random_params(a, b, task.dims[0], task.dims[1], rng)
    labels = _labels_for(task.config, task.cal.n, task.m_flips, rng)
    sample = gen_paired_sample(params, labels, rng)
    if callable(task.method):
        report = task.method(sample, params, task.cal, rng, task.delta)
    else:
        report = run_method(task.method, sample, params, task.cal, rng, task.delta)
    return bool(report.reject)


def _map(tasks: Sequence[_Task], workers: int) -> list[bool]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=chunk))


@dataclass(frozen=True)
class RiskEstimate:
    """Worst-case error rates over the canonical configurations.

    ``rates`` holds the rejection rate of each configuration in the order
    same, switched, flipped, near-switch.
    """

    type1: float
    type2: float
    risk: float
    n_rep: int
    se: float
    rates: tuple = ()

    def to_dict(self) -> dict:
        return {
            "type1": self.type1, "type2": self.type2, "risk": self.risk,
            "n_rep": self.n_rep, "se": self.se, "rates": list(self.rates),
        }


def _risk_from(rejects: Sequence[bool], n_rep: int) -> RiskEstimate:
    arr = np.asarray(rejects, dtype=float).reshape(4, n_rep)
    rates = arr.mean(axis=1)
    type1 = float(max(rates[LabelConfig.SAME], rates[LabelConfig.SWITCHED]))
    type2 = float(max(1.0 - rates[LabelConfig.FLIPS], 1.0 - rates[LabelConfig.NEAR_SWITCH]))
    se = math.sqrt(type1 * (1 - type1) / n_rep + type2 * (1 - type2) / n_rep)
    return RiskEstimate(type1, type2, type1 + type2, n_rep, se, tuple(float(x) for x in rates))


def _tasks_for_cell(cal, dims, test, n_rep, seed, cell, m_flips, delta) -> list[_Task]:
    m = alternative_flips(cal.n, cal.epsilon) if m_flips is None else int(m_flips)
    return [
        _Task(cal, tuple(dims), test, config, m, float(delta), int(seed), cell, rep)
        for config in (LabelConfig.SAME, LabelConfig.SWITCHED, LabelConfig.FLIPS, LabelConfig.NEAR_SWITCH)
        for rep in range(n_rep)
    ]


def estimate_risk(
    cal: Calibration,
    dims: tuple[int, int],
    test,
    n_rep: int = 200,
    seed: int = 0,
    *,
    workers: int = 1,
    m_flips: int | None = None,
    delta: float = 1.0,
    cell: int = 0,
) -> RiskEstimate:
    """Type I error, type II error and their sum for one calibration.

    ``test`` is a method name from :data:`METHODS` or a module-level callable
    with the same signature.  The alternative flips ``max(2 ceil(n eps), 2)``
    labels unless ``m_flips`` is given.
    """
    if n_rep < 1:
        raise ValueError("n_rep must be at least 1")
    tasks = _tasks_for_cell(cal, dims, test, n_rep, seed, cell, m_flips, delta)
    return _risk_from(_map(tasks, workers), n_rep)


@dataclass(frozen=True)
class PhaseGrid:
    s: float
    n: int
    r_values: np.ndarray
    beta_values: np.ndarray
    risk: np.ndarray
    type1: np.ndarray
    type2: np.ndarray
    se: np.ndarray
    boundary: np.ndarray

    def rows(self):
        """One record per cell, in r-major order."""
        for i, r in enumerate(self.r_values):
            for j, beta in enumerate(self.beta_values):
                yield {
                    "r": float(r), "beta": float(beta), "risk": float(self.risk[i, j]),
                    "type1": float(self.type1[i, j]), "type2": float(self.type2[i, j]),
                    "se": float(self.se[i, j]), "beta_star": float(self.boundary[i]),
                }


def phase_sweep(
    s: float,
    n: int,
    r_grid,
    beta_grid,
    test,
    n_rep: int = 200,
    seed: int = 0,
    *,
    dims: tuple[int, int] = (2, 2),
    workers: int = 1,
    delta: float = 1.0,
) -> PhaseGrid:
    r_values = np.asarray(r_grid, dtype=float).reshape(-1)
    beta_values = np.asarray(beta_grid, dtype=float).reshape(-1)
    if r_values.size == 0 or beta_values.size == 0:
        raise ValueError("grids must be nonempty")
    tasks: list[_Task] = []
    for i, r in enumerate(r_values):
        for j, beta in enumerate(beta_values):
            cal = Calibration(int(n), float(r), float(s), float(beta))
            tasks.extend(_tasks_for_cell(cal, dims, test, n_rep, seed, i * beta_values.size + j, None, delta))
    rejects = _map(tasks, workers)
    per_cell = 4 * n_rep
    shape = (r_values.size, beta_values.size)
    risk, type1, type2, se = (np.empty(shape) for _ in range(4))
    for k in range(r_values.size * beta_values.size):
        est = _risk_from(rejects[k * per_cell:(k + 1) * per_cell], n_rep)
        i, j = divmod(k, beta_values.size)
        risk[i, j], type1[i, j], type2[i, j], se[i, j] = est.risk, est.type1, est.type2, est.se
    boundary = np.array([beta_star_general(float(r), float(s)) for r in r_values])
    return PhaseGrid(float(s), int(n), r_values, beta_values, risk, type1, type2, se, boundary)


@dataclass(frozen=True)
class MaxStatSummary:
    mean: float
    sd: float
    values: np.ndarray


def _null_contrast(u, v, r, s):
    return np.abs(math.sqrt(r) * u + math.sqrt(s) * v) - math.sqrt(r + s) * np.abs(v)


def max_stat_diagnostic(r: float, s: float, n: int, n_rep: int = 20, seed: int = 0) -> MaxStatSummary:
    """Normalised maximum of the null combined contrast over ``n_rep`` draws."""
    if n < 1000:
        raise ValueError("max_stat_diagnostic needs n >= 1000")
    cal = Calibration(int(n), float(r), float(s), 1.0)
    scale = math.sqrt(2.0 * math.log(n))
    vals = np.empty(n_rep)
    for rep in range(n_rep):
        draw = gen_mixture_pair(cal, Hypothesis.NULL, child_rng(seed, rep))
        vals[rep] = np.max(_null_contrast(draw.u, draw.v, r, s)) / scale
    return MaxStatSummary(float(vals.mean()), float(vals.std(ddof=1)) if n_rep > 1 else 0.0, vals)


def mc_survival(r: float, s: float, n: int, t, n_samples: int = 1_000_000, seed: int = 0):
    """Empirical null survival of ``|sqrt(r) U + sqrt(s) V| - sqrt(r + s) |V|``.

    ``n`` enters only through the shift ``sqrt(2 (r + s) log n)`` of ``V``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = child_rng(seed, 0)
    shift = math.sqrt(2.0 * (r + s) * math.log(n))
    u = rng.standard_normal(n_samples)
    v = np.where(rng.random(n_samples) < 0.5, -shift, shift) + rng.standard_normal(n_samples)
    w = np.sort(_null_contrast(u, v, r, s))
    t_arr = np.asarray(t, dtype=float)
    out = (n_samples - np.searchsorted(w, t_arr, side="right")) / n_samples
    return float(out) if out.ndim == 0 else out
