import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from clusterequiv.model import PairedSample, calibrate_scales
from clusterequiv.numerics import std_normal_cdf
from clusterequiv.sim import mc_survival
from clusterequiv.stats import (
    ChiSquare1Survival,
    HcConfig,
    SurvivalSpec,
    TailRegime,
    c_minus,
    c_plus,
    hc_order_statistic_form,
    hc_sup,
    llr_approx,
    llr_exact,
    log_survival_rs,
    pair_log_prob,
    pair_prob,
    project,
    survival_rs,
    survival_rs_function,
    tail_exponent_comp0,
    tail_exponent_comp1,
    tail_exponent_easy,
)

from helpers import dense_hc_sup

N = 10_000


# --------------------------------------------------------------------------- contrasts


def test_project_normalises_directions():
    x = np.array([[3.0, 4.0], [1.0, 0.0]])
    y = np.array([[2.0], [-1.0]])
    proj = project(PairedSample(x, y), [3.0, 4.0], [5.0])
    assert np.allclose(proj.x, [5.0, 0.6])
    assert np.allclose(proj.y, [2.0, -1.0])
    with pytest.raises(ValueError):
        project(PairedSample(x, y), [1.0], [1.0])


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 5), st.floats(0.1, 5))
def test_contrast_symmetries(x, y, a, b):
    cm = c_minus(x, y, a, b)
    assert c_plus(x, y, a, b) == -cm
    assert c_minus(-x, y, a, b) == pytest.approx(-cm)
    # minus is positive only when the signs disagree
    if cm > 0:
        assert x * y < 0
    assert abs(cm) <= 2 * min(abs(a * x), abs(b * y)) + 1e-12


# --------------------------------------------------------------------------- pair probability


def test_pair_prob_at_zero_closed_form():
    spec = SurvivalSpec(0.7, -0.4, 1.3, 0.8, 1000)
    expected = std_normal_cdf(0.7) * std_normal_cdf(0.4) + std_normal_cdf(-0.7) * std_normal_cdf(-0.4)
    # C- > 0 iff A and B have opposite signs
    assert pair_prob(spec, 0.0) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-3, 3), st.floats(-3, 3),
    st.floats(0.3, 3).map(lambda v: v) | st.floats(-3, -0.3),
    st.floats(0.3, 3) | st.floats(-3, -0.3),
    st.floats(-1.5, 1.5),
)
def test_pair_prob_monte_carlo(a1, b1, a2, b2, t):
    n = 1000
    spec = SurvivalSpec(a1, b1, a2, b2, n)
    rng = np.random.default_rng(0)
    z1, z2 = rng.standard_normal((2, 200_000))
    c = c_minus(z1 + a1, z2 + b1, a2, b2)
    emp = np.mean(c > t * math.sqrt(2 * math.log(n)))
    p = pair_prob(spec, t)
    assert abs(emp - p) <= 5 * math.sqrt(max(p * (1 - p), 1e-8) / 200_000) + 1e-5


def _mp_pair_log(a1, b1, a2, b2, n, t):
    """High-precision value from the opposite-sign decomposition."""
    with mp.workdps(60):
        h = abs(t) * mp.sqrt(2 * mp.log(n)) / 2
        al, be = mp.sign(a2) * a1, mp.sign(b2) * b1
        ka, kb = h / abs(a2), h / abs(b2)
        ahi, alo = mp.ncdf(al - ka), mp.ncdf(-al - ka)
        bhi, blo = mp.ncdf(be - kb), mp.ncdf(-be - kb)
        if t >= 0:
            return float(mp.log(ahi * blo + alo * bhi))
        return float(mp.log(1 - (ahi * bhi + alo * blo)))


@pytest.mark.parametrize("t", [-2.0, -0.5, 0.3, 2.0, 8.0, 25.0])
def test_pair_log_prob_deep_tails(t):
    spec = SurvivalSpec(2.0, 3.0, 2.0, 3.0, N)
    ours = pair_log_prob(spec, t)
    assert math.isfinite(ours)
    assert ours == pytest.approx(_mp_pair_log(2.0, 3.0, 2.0, 3.0, N, t), rel=1e-10, abs=1e-13)


def test_pair_prob_validation():
    with pytest.raises(ValueError):
        SurvivalSpec(0, 0, 0, 1, 100)
    with pytest.raises(ValueError):
        SurvivalSpec(0, 0, 1, 1, 2)


# --------------------------------------------------------------------------- survival functions


@pytest.mark.parametrize("r,s", [(0.5, 0.0), (0.3, 0.2), (1.0, 1.0), (2.0, 0.1)])
def test_survival_rs_monotone_with_limits(r, s):
    t = np.linspace(-6, 6, 2001)
    sv = survival_rs(r, s, N, t)
    assert np.all(np.diff(sv) <= 1e-15)
    assert survival_rs(r, s, N, -60.0) == pytest.approx(1.0, abs=1e-12)
    assert survival_rs(r, s, N, 60.0) < 1e-100
    log_s, log_c = survival_rs_function(r, s, N).logs(t)
    assert np.allclose(np.exp(log_s) + np.exp(log_c), 1.0, atol=1e-12)


@pytest.mark.parametrize("r,s", [(0.5, 0.0), (0.3, 0.2)])
def test_survival_rs_against_monte_carlo(r, s):
    ts = np.array([-0.5, 0.0, 0.4, 1.0])
    emp = mc_survival(r, s, N, ts, n_samples=200_000, seed=3)
    exact = survival_rs(r, s, N, ts)
    assert np.all(np.abs(emp - exact) <= 4 * np.sqrt(exact * (1 - exact) / 200_000) + 1e-6)


def test_log_survival_stays_finite_far_out():
    vals = [log_survival_rs(1.0, 0.5, N, t) for t in (5.0, 20.0, 50.0)]
    assert all(math.isfinite(v) for v in vals)
    assert vals[0] > vals[1] > vals[2]


def test_chisquare_survival_logs():
    surv = ChiSquare1Survival(0.0)
    assert surv(1.0) == pytest.approx(sps.chi2.sf(1.0, 1))
    log_s, log_c = surv.logs(np.array([0.5, 3.0]))
    assert np.allclose(np.exp(log_s) + np.exp(log_c), 1.0)


# --------------------------------------------------------------------------- higher criticism

CONFIGS = [
    HcConfig("all-real", "s-one-minus-s", "upper-tail-count"),
    HcConfig("all-real", "s-only", "upper-tail-count"),
    HcConfig("positive-only", "s-one-minus-s", "upper-tail-count"),
    HcConfig("positive-only", "s-one-minus-s", "lower-tail-count"),
    HcConfig("bounded-by-log-n", "s-only", "upper-tail-count", n=50),
    HcConfig("bounded-by-log-n", "s-one-minus-s", "lower-tail-count", n=50),
]


def _logistic(t):
    return 1.0 / (1.0 + np.exp(np.asarray(t, dtype=float)))


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: f"{c.range.value}/{c.denominator.value}/{c.direction.value}")
@pytest.mark.parametrize("seed", range(4))
def test_hc_sup_matches_dense_grid(cfg, seed):
    rng = np.random.default_rng(seed)
    values = rng.logistic(size=40) * 1.5 + 0.3
    lo, hi, _ = cfg.interval()
    lo, hi = max(lo, -40.0), min(hi, 40.0)
    ours = hc_sup(values, _logistic, cfg)
    oracle = dense_hc_sup(
        values, _logistic, lo, hi,
        use_q=cfg.denominator.value == "s-one-minus-s",
        upper=cfg.direction.value == "upper-tail-count",
    )
    assert ours >= oracle - 1e-9
    assert ours == pytest.approx(oracle, rel=1e-6)


def test_hc_sup_degenerate_zero_diffs():
    cfg = HcConfig("positive-only", "s-one-minus-s", "upper-tail-count")
    assert hc_sup(np.zeros(20), ChiSquare1Survival(0.0), cfg) == 0.0


def test_hc_sup_scale_argument():
    rng = np.random.default_rng(2)
    v = rng.normal(size=30)
    assert hc_sup(v * 3.0, _logistic, scale=3.0) == pytest.approx(hc_sup(v, _logistic), rel=1e-14)


def test_hc_sup_rejects_bad_input():
    with pytest.raises(ValueError):
        hc_sup([], _logistic)
    with pytest.raises(ValueError):
        hc_sup([np.nan], _logistic)
    # survival exactly 0 inside a closed range
    with pytest.raises(ValueError):
        hc_sup([0.0], lambda t: 0.0, HcConfig("bounded-by-log-n", "s-only", n=50))


def test_order_statistic_form_is_left_limit_supremum():
    rng = np.random.default_rng(9)
    values = rng.logistic(size=60)
    p = _logistic(values)
    # left limits at each sample count #{v >= v_i}
    order = np.sort(values)[::-1]
    counts = np.arange(1, values.size + 1)
    pv = _logistic(order)
    brute = np.max(np.abs(counts - values.size * pv) / np.sqrt(values.size * pv))
    assert hc_order_statistic_form(p) == pytest.approx(brute, rel=1e-12)
    assert hc_order_statistic_form(p) <= hc_sup(values, _logistic, HcConfig("all-real", "s-only")) + 1e-12


def test_order_statistic_form_validation():
    with pytest.raises(ValueError):
        hc_order_statistic_form([0.0, 0.5])


def test_hc_null_uniform_scale():
    # for uniform p-values the statistic is of order sqrt(2 log log m)
    rng = np.random.default_rng(1)
    m = 5000
    vals = [hc_sup(rng.logistic(size=m), _logistic) for _ in range(20)]
    assert 1.0 < np.median(vals) < 6.0


# --------------------------------------------------------------------------- likelihood ratio


def _llr_density(u, v, r, s, n):
    log_n = math.log(n)
    mu_u, mu_v = math.sqrt(2 * r * log_n), math.sqrt(2 * s * log_n)
    mu = math.sqrt(2 * (r + s) * log_n)
    lp = np.logaddexp(
        sps.norm.logpdf(u, mu_u) + sps.norm.logpdf(v, mu_v),
        sps.norm.logpdf(u, -mu_u) + sps.norm.logpdf(v, -mu_v),
    )
    lq = sps.norm.logpdf(u) + np.logaddexp(sps.norm.logpdf(v, mu), sps.norm.logpdf(v, -mu))
    return lp - lq


@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(0.01, 4), st.floats(0, 4), st.sampled_from([100, 10**4]))
def test_llr_exact_matches_density_ratio(u, v, r, s, n):
    assert llr_exact(u, v, r, s, n) == pytest.approx(_llr_density(u, v, r, s, n), abs=1e-8, rel=1e-9)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(1e-6, 4), st.floats(0, 4),
       st.sampled_from([10**2, 10**4, 10**6]))
def test_llr_approximation_within_log_two(u, v, r, s, n):
    assert abs(llr_exact(u, v, r, s, n) - llr_approx(u, v, r, s, n)) <= math.log(2) + 1e-12


# --------------------------------------------------------------------------- tail exponents


def test_tail_exponent_regimes():
    assert tail_exponent_easy(1.0, 0.0, 0.25, part=1) == (0.25, TailRegime.MIDDLE)
    assert tail_exponent_easy(1.0, 0.0, 2.0, part=1)[1] is TailRegime.BULK
    assert tail_exponent_easy(1.0, 0.25, 2.0)[1] is TailRegime.FAR
    assert tail_exponent_easy(1.0, 0.25, 1.0)[0] == pytest.approx(0.125)
    assert tail_exponent_comp0(1.0, 0.0, -2.0) == (0.0, TailRegime.BULK)
    assert tail_exponent_comp0(1.0, 0.0, 0.0) == (pytest.approx(0.5), TailRegime.MIDDLE)
    assert tail_exponent_comp1(1.0, 0.0, 0.5)[1] is TailRegime.BULK
    small = 0.5 - math.sqrt(0.2) * math.sqrt(0.7) + 0.2
    t = small + 0.1
    assert tail_exponent_comp1(0.5, 0.2, t) == (pytest.approx(0.01 / (2 * small)), TailRegime.MIDDLE)
    assert tail_exponent_comp1(1.0, 0.0, 1.5) == (pytest.approx(0.25), TailRegime.FAR)


def test_comp0_exponent_matches_survival_slope():
    # the exponent is the slope of -log S in log n, which removes polynomial prefactors
    r, s, t = 0.6, 0.2, 0.1
    n1, n2 = 1e40, 1e80
    scale = lambda n: t * math.sqrt(2 * math.log(n))  # noqa: E731
    l1 = log_survival_rs(r, s, int(n1), scale(n1))
    l2 = log_survival_rs(r, s, int(n2), scale(n2))
    slope = -(l2 - l1) / (math.log(n2) - math.log(n1))
    assert slope == pytest.approx(tail_exponent_comp0(r, s, t)[0], abs=0.01)


def test_calibrated_scales_drive_survival():
    a, b = calibrate_scales(N, 0.4, 0.3)
    direct = pair_prob(SurvivalSpec(a, b, a, b, N), 0.2)
    assert survival_rs(0.4, 0.3, N, 0.2) == direct
