import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from clusterequiv.estimate import (
    EigenConvergenceError,
    estimation_loss,
    second_moment,
    spectral_fit,
    spectral_mean_estimate,
    top_eigenpair,
)


def _mixture_rows(theta, n, rng):
    z = rng.choice([-1.0, 1.0], size=n)
    return z[:, None] * theta[None, :] + rng.standard_normal((n, theta.size))


def test_second_moment_examples():
    v = np.array([[1.0, -2.0, 3.0]])
    assert np.allclose(second_moment(v), v.T @ v)
    theta = np.array([2.0, 1.0])
    rows = np.array([theta, -theta, -theta, theta])
    assert np.allclose(second_moment(rows), np.outer(theta, theta))


def test_second_moment_law_of_large_numbers():
    theta = np.zeros(5)
    theta[0] = 2.0
    m = second_moment(_mixture_rows(theta, 10**5, np.random.default_rng(0)))
    assert m[0, 0] == pytest.approx(5.0, abs=0.1)
    assert np.allclose(m, m.T)
    assert np.min(np.linalg.eigvalsh(m)) >= -1e-12


def test_top_eigenpair_identity():
    pair = top_eigenpair(np.eye(4))
    assert pair.value == pytest.approx(1.0)
    assert np.linalg.norm(pair.vector) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(np.eye(4) @ pair.vector - pair.vector) <= 1e-10 * 2


def test_top_eigenpair_diagonal():
    pair = top_eigenpair(np.diag([4.0, 1.0, 1.0]))
    assert pair.value == pytest.approx(4.0)
    assert np.allclose(pair.vector, [1.0, 0.0, 0.0], atol=1e-8)


def test_top_eigenpair_rank_one_plus_identity():
    rng = np.random.default_rng(4)
    v = rng.standard_normal(6)
    v /= np.linalg.norm(v)
    pair = top_eigenpair(np.outer(v, v) + np.eye(6))
    assert pair.value == pytest.approx(2.0, abs=1e-9)
    assert min(np.linalg.norm(pair.vector - v), np.linalg.norm(pair.vector + v)) <= 1e-8


def test_top_eigenpair_negative_spectrum():
    pair = top_eigenpair(np.diag([-1.0, -5.0]))
    assert pair.value == pytest.approx(-1.0)


def test_top_eigenpair_sign_convention():
    pair = top_eigenpair(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    first = pair.vector[np.flatnonzero(np.abs(pair.vector) > 1e-12)[0]]
    assert first > 0


def test_top_eigenpair_nonconvergence():
    # nearly tied top eigenvalues with a tiny budget
    m = np.diag([1.0, 1.0 - 1e-9, 0.0])
    m[0, 1] = m[1, 0] = 1e-10
    with pytest.raises(EigenConvergenceError) as info:
        top_eigenpair(m + np.diag([0.0, 0.0, 0.5]), tol=1e-15, max_iter=3)
    assert info.value.iterations > 0 and info.value.residual > 0


def test_top_eigenpair_rejects_asymmetric():
    with pytest.raises(ValueError):
        top_eigenpair(np.array([[1.0, 2.0], [0.0, 1.0]]))


sym = hnp.arrays(np.float64, (5, 5), elements=st.floats(-10, 10)).map(lambda a: (a + a.T) / 2)


@settings(max_examples=60, deadline=None)
@given(sym)
def test_top_eigenpair_matches_eigh(m):
    try:
        pair = top_eigenpair(m, max_iter=200_000)
    except EigenConvergenceError:
        # allowed only when the top of the spectrum is (nearly) degenerate in magnitude
        w = np.linalg.eigvalsh(m)
        assert w[-1] - w[-2] < 1e-3 * (abs(w[-1]) + 1)
        return
    w = np.linalg.eigvalsh(m)
    assert pair.value == pytest.approx(w[-1], abs=1e-8 * (abs(w[-1]) + 1))
    assert np.linalg.norm(m @ pair.vector - pair.value * pair.vector) <= 1e-10 * (abs(pair.value) + 1)


def test_spectral_estimate_noiseless():
    theta = np.array([2.0, 0.0])
    rows = np.array([theta, -theta] * 5)
    fit = spectral_fit(rows)
    assert fit.lambda1 == pytest.approx(4.0)
    assert np.allclose(fit.theta_hat, [math.sqrt(3.0), 0.0])


def test_spectral_estimate_clipped():
    rows = np.random.default_rng(1).standard_normal((200, 3)) * 0.1
    fit = spectral_fit(rows)
    assert fit.clipped and np.all(fit.theta_hat == 0)


def test_spectral_estimate_warns_when_wide():
    with pytest.warns(RuntimeWarning):
        spectral_fit(np.random.default_rng(0).standard_normal((5, 8)))


def test_spectral_estimate_rate_median():
    p, n = 50, 5000
    losses = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        theta = rng.standard_normal(p)
        theta *= 2.0 / np.linalg.norm(theta)
        losses.append(estimation_loss(spectral_mean_estimate(_mixture_rows(theta, n, rng)), theta))
    assert np.median(losses) <= 0.3


def test_spectral_estimate_sign_equivariance():
    rng = np.random.default_rng(2)
    theta = np.array([1.5, -0.5, 1.0])
    x = _mixture_rows(theta, 2000, rng)
    assert estimation_loss(spectral_mean_estimate(-x), theta) == pytest.approx(
        estimation_loss(spectral_mean_estimate(x), theta), abs=1e-12)


def test_covariance_concentration():
    p, n = 20, 4000
    rng = np.random.default_rng(3)
    theta = np.full(p, 1.5 / math.sqrt(p))
    m = second_moment(_mixture_rows(theta, n, rng)) - np.eye(p)
    top = np.linalg.eigvalsh(m)[-1]
    assert abs(top - 1.5**2) <= 4 * (1 + 2 * 1.5) * math.sqrt(p / n)


def test_estimation_loss_examples():
    t = np.array([1.0, -2.0])
    assert estimation_loss(t, t) == 0
    assert estimation_loss(-t, t) == 0
    assert estimation_loss(np.zeros(2), t) == pytest.approx(np.linalg.norm(t))
    with pytest.raises(ValueError):
        estimation_loss([1.0], t)


@given(hnp.arrays(np.float64, 4, elements=st.floats(-5, 5)), hnp.arrays(np.float64, 4, elements=st.floats(-5, 5)))
def test_estimation_loss_sign_symmetric(a, b):
    base = estimation_loss(a, b)
    assert estimation_loss(-a, b) == base == estimation_loss(a, -b)
    assert base >= 0
