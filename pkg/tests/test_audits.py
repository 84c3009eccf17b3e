import math

import numpy as np
import pytest

from tradeoff_lab import audits
from tradeoff_lab.losses import LossKind
from tradeoff_lab.models import RidgeModel
from tradeoff_lab.numerics import NormSpec, norm


@pytest.mark.parametrize("kind", list(LossKind))
def test_certificate_battery_passes(kind):
    s = audits.certificate_battery(kind, 50_000, 3)
    assert s.passed and s.min_slack1 >= -1e-12 and s.min_slack2 >= -1e-12


def test_zero_one_battery_hits_ties_and_equal_pairs():
    # snapped scores must create slack exactly 0 somewhere
    s = audits.certificate_battery(LossKind.ZERO_ONE, 20_000, 1)
    assert s.min_slack1 == 0.0


def test_exhaustive_counts():
    assert audits.zero_one_exhaustive(2).n == 6**4
    assert audits.zero_one_exhaustive(3).passed


def test_pinsker_battery():
    gap, bad = audits.pinsker_battery(20_000, 0)
    assert bad == 0 and gap >= 0


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_candidates_stay_in_the_ball(p):
    spec = NormSpec(p)
    theta, x = np.array([0.3, -1.2, 0.5]), np.array([0.1, 0.0, 0.2])
    d = audits.perturbation_candidates(theta, x, 0.4, spec, directions=500)
    assert np.all(norm(d, spec) <= 0.4 * (1 + 1e-12))


def test_brute_force_never_beats_the_closed_form():
    out = audits.closed_form_oracle(100, 5, directions=2000)
    assert all(s.passed for s in out)


def test_brute_force_example():
    dev, loss = audits.brute_force_ridge(RidgeModel([1.0, -1.0], 2), np.ones(2), 1.0, 0.1, NormSpec("inf"))
    assert dev == pytest.approx(0.04)
    assert loss == pytest.approx(0.5)


def test_danskin_and_lambda_checks():
    worst, fails, n = audits.danskin_check(100, 1)
    assert n == 100 and fails == 0 and worst < 1e-4
    assert audits.lambda_star_check(trials=2)[1]


def test_batteries_cover_the_grid():
    ridge = list(audits.ridge_battery(degrees=[1, 2, 3], dims=[2, 5], families=["gaussian", "rademacher",
              "uniform-cube"], eps_grid=[0, 0.1, 0.5, 1], norms=[2.0, math.inf], sigma2=1.0, noise="gaussian",
              cov_kind="toeplitz", rho=0.3, shift=0.3, seed=7))
    assert len(ridge) == 3 * 2 * 3 * 4 * 2
    with pytest.raises(ValueError):
        audits.make_cov(2, "banded")
