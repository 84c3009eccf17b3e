import math

import numpy as np
import pytest
from scipy import optimize

from tradeoff_lab.distributions import regression_spec
from tradeoff_lab.numerics import NormSpec
from tradeoff_lab.ridge_analysis import RidgeBoundInputs, tradeoff_bound
from tradeoff_lab.models import RidgeModel
from tradeoff_lab.training import (
    TrainConfig,
    adversarial_fit,
    erm_fit,
    frontier_sweep,
    training_set,
)

L2, LINF = NormSpec(2), NormSpec("inf")


def test_linear_erm_matches_least_squares_solve():
    spec = regression_spec([1.0, -2.0, 0.5], 0.0)
    X, y = training_set(spec, 200, 4)
    oracle = np.linalg.lstsq(X, y, rcond=None)[0]
    fit = erm_fit(X, y, 1, TrainConfig(step0=0.5, iterations=2000))
    assert np.linalg.norm(fit.theta - oracle) < 1e-3
    assert np.linalg.norm(fit.theta - spec.theta_star) < 1e-3


def test_single_point_interpolation():
    fit = erm_fit(np.array([[2.0]]), np.array([4.0]), 1, TrainConfig(step0=0.1, iterations=500))
    assert fit.theta[0] == pytest.approx(2.0, abs=1e-6)


def test_stationary_start_stays_put():
    spec = regression_spec([0.7, 0.2], 0.0, degree=2)
    X, y = training_set(spec, 50, 0)
    fit = erm_fit(X, y, 2, TrainConfig(), theta0=spec.theta_star)
    np.testing.assert_array_equal(fit.theta, spec.theta_star)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_zero_eps_training_is_bitwise_erm(p):
    spec = regression_spec([0.7, 0.2], 0.3, degree=p)
    X, y = training_set(spec, 64, 1)
    cfg = TrainConfig(iterations=100, init="random-gaussian", seed=5)
    a = erm_fit(X, y, p, cfg)
    b = adversarial_fit(X, y, p, 0.0, LINF, cfg)
    assert a.theta.tobytes() == b.theta.tobytes()
    assert a.trace == b.trace


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_objective_trace_never_increases(p, eps):
    spec = regression_spec([0.7, 0.2], 0.3, degree=p)
    X, y = training_set(spec, 64, 2)
    fit = adversarial_fit(X, y, p, eps, L2, TrainConfig(iterations=200, init="random-gaussian"))
    assert all(b <= a + 1e-10 for a, b in zip(fit.trace, fit.trace[1:]))


def test_symmetric_start_is_deterministic():
    # the gradient vanishes at 0 for p = 2, so the zero init stays there
    spec = regression_spec([0.7, 0.2], 0.3, degree=2)
    X, y = training_set(spec, 64, 2)
    a = adversarial_fit(X, y, 2, 0.1, L2, TrainConfig(iterations=50))
    b = adversarial_fit(X, y, 2, 0.1, L2, TrainConfig(iterations=50))
    np.testing.assert_array_equal(a.theta, np.zeros(2))
    assert a.trace == b.trace


def test_divergence_is_reported():
    X = np.array([[1e5]])
    fit = erm_fit(X, np.array([0.0]), 3, TrainConfig(), theta0=np.array([10.0]))
    assert fit.failed and "divergence" in fit.message


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(step0=0.0)
    with pytest.raises(ValueError):
        TrainConfig(init="ones")
    with pytest.raises(ValueError):
        adversarial_fit(np.ones((2, 1)), np.ones(2), 1, -0.1, L2, TrainConfig())


def population_objective(theta, eps, sigma):
    # theta x - y ~ N(0, v) with v = (theta - 1)^2 + sigma^2 when theta* = 1
    v = (theta - 1.0) ** 2 + sigma**2
    c = eps * abs(theta)
    return 0.5 * (v + 2 * c * math.sqrt(2 * v / math.pi) + c * c)


def population_minimiser(eps, sigma):
    return optimize.minimize_scalar(lambda t: population_objective(t, eps, sigma), bounds=(-3, 3), method="bounded",
                                    options={"xatol": 1e-10}).x


def test_population_oracle_shrinks():
    assert population_minimiser(0.0, 0.5) == pytest.approx(1.0, abs=1e-6)
    assert abs(population_minimiser(0.3, 0.5)) < 1.0


def test_linear_adversarial_fit_shrinks_like_the_oracle():
    eps, sigma = 0.3, 0.5
    spec = regression_spec([1.0], sigma**2)
    oracle = population_minimiser(eps, sigma)
    shrunk = []
    gaps = []
    for seed in range(10):
        X, y = training_set(spec, 500, seed)
        cfg = TrainConfig(step0=0.5, iterations=300, seed=seed)
        t0 = erm_fit(X, y, 1, cfg).theta[0]
        te = adversarial_fit(X, y, 1, eps, L2, cfg).theta[0]
        shrunk.append(abs(te) < abs(t0))
        gaps.append(te - oracle)
    assert sum(shrunk) >= 9
    assert abs(np.mean(gaps)) < 0.05


def test_frontier_rows():
    spec = regression_spec([1.0, -0.5], 0.25)
    rows = frontier_sweep(spec, [0.0, 0.2, 0.5], L2, TrainConfig(iterations=200), 20_000, 3)
    assert rows[0].bound == pytest.approx(0.25 / 3)
    for r in rows:
        assert r.verdict
        assert r.L_eps.value == pytest.approx((r.eps * np.linalg.norm(r.theta_hat)) ** 2, rel=1e-12)
        inp = RidgeBoundInputs.from_model(RidgeModel(r.theta_hat, 1), spec.cov, L2, r.eps, spec.sigma2)
        assert r.bound == tradeoff_bound(inp)


def test_frontier_marks_diverged_rows():
    spec = regression_spec([30.0], 1.0, degree=3)
    rows = frontier_sweep(spec, [0.0], L2, TrainConfig(iterations=5, init="random-gaussian", init_scale=1e3), 100, 0)
    assert rows[0].failed and not rows[0].verdict
