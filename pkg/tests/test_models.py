import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tradeoff_lab.losses import NO_UNIQUE_MAX
from tradeoff_lab.models import (
    LinearClassifier,
    RidgeModel,
    adversarial_ls_gradient,
    argmax_region,
    margin_slack,
    output_range,
    predict_ridge,
    predict_softmax,
    score_interval,
    worst_case_deviation,
    worst_case_ls_loss,
)
from tradeoff_lab.numerics import NormSpec, norm

L2, LINF, L1 = NormSpec(2), NormSpec("inf"), NormSpec(1)


def grid_perturbations(d, eps, spec, n=21):
    """Dense grid of the eps-ball, kept only where the norm constraint holds."""
    g = np.array(list(itertools.product(np.linspace(-eps, eps, n), repeat=d)))
    return g[norm(g, spec) <= eps * (1 + 1e-12)]


def test_predict_examples():
    assert predict_ridge(RidgeModel([1, -1], 1), [3, 1]) == 2
    assert predict_ridge(RidgeModel([1, 0], 2), [3, 5]) == 9
    assert predict_ridge(RidgeModel([0, 0], 3), [7, 1]) == 0


def test_score_interval_examples():
    m = RidgeModel([1, -1], 1)
    iv = score_interval(m, [1, 1], 0.1, LINF)
    assert (iv.lo, iv.hi) == pytest.approx((-0.2, 0.2), abs=1e-15)
    corners = np.array(list(itertools.product([-0.1, 0.1], repeat=2)))
    z = (np.array([1.0, 1.0]) + corners) @ m.theta
    assert (z.min(), z.max()) == pytest.approx((iv.lo, iv.hi), abs=1e-15)
    assert tuple(score_interval(m, [1, 3], 0.0, LINF)) == (-2, -2)
    assert tuple(score_interval(RidgeModel([2, 0]), [0, 0], 0.5, L2)) == (-1, 1)


def test_output_range_examples():
    iv = output_range(RidgeModel([1.0, -1.0], 2), [1, 1], 0.1, LINF)
    assert (iv.lo, iv.hi) == pytest.approx((0.0, 0.04), abs=1e-15)
    dense = np.linspace(-0.2, 0.2, 4001) ** 2
    assert (dense.min(), dense.max()) == pytest.approx((iv.lo, iv.hi), abs=1e-15)
    iv = output_range(RidgeModel([1.0], 3), [1.5], 0.5, L2)
    assert (iv.lo, iv.hi) == (1.0, 8.0)
    m = RidgeModel([0.3, 0.7], 3)
    assert tuple(output_range(m, [1, 2], 0.0, L2)) == (predict_ridge(m, [1, 2]),) * 2


@pytest.mark.parametrize("p, s, r, expected", [(1, 0.7, 1.0, 1.0), (2, 1.0, 1.0, 3.0), (3, 0.0, 2.0, 8.0)])
def test_worst_case_deviation_examples(p, s, r, expected):
    m = RidgeModel([1.0], p)
    assert worst_case_deviation(m, [s], r, L2) == pytest.approx(expected, rel=1e-15)
    deltas = np.linspace(-r, r, 20001)
    assert np.max(np.abs((s + deltas) ** p - s**p)) == pytest.approx(expected, rel=1e-12)


def test_worst_case_ls_examples():
    w = worst_case_ls_loss(RidgeModel([1.0, -1.0], 2), [1, 1], 1.0, 0.1, LINF)
    assert w.value == pytest.approx(0.5)
    assert w.argmax_score == 0.0
    # y at the midpoint of [0, 2]: tie resolved toward the lower endpoint
    w = worst_case_ls_loss(RidgeModel([1.0], 1), [1.0], 1.0, 1.0, L2)
    assert w.value == 0.5 and w.argmax_score == 0.0
    m = RidgeModel([0.4, 1.1], 3)
    assert worst_case_ls_loss(m, [1, -1], 2.0, 0.0, L2).value == pytest.approx((predict_ridge(m, [1, -1]) - 2) ** 2 / 2)


@given(
    st.integers(1, 3),
    st.integers(1, 3),
    st.sampled_from([L1, L2, LINF]),
    st.floats(0.0, 1.0),
    st.integers(0, 2**32 - 1),
)
def test_closed_forms_dominate_grid_and_are_attained(d, p, spec, eps, seed):
    rng = np.random.default_rng(seed)
    m = RidgeModel(rng.standard_normal(d), p)
    x = rng.standard_normal(d)
    y = float(rng.standard_normal())
    deltas = grid_perturbations(d, eps, spec, n=11 if d == 3 else 41)
    f = ((x + deltas) @ m.theta) ** p
    dev = worst_case_deviation(m, x, eps, spec)
    wl = worst_case_ls_loss(m, x, y, eps, spec)
    tol = 1e-12 * max(1.0, abs(dev), abs(wl.value))
    assert np.max(np.abs(f - predict_ridge(m, x))) <= dev + tol
    assert np.max((f - y) ** 2 / 2) <= wl.value + tol
    # the reported argmax score lies in the score interval and realises the value
    iv = score_interval(m, x, eps, spec)
    assert iv.lo - 1e-12 <= wl.argmax_score <= iv.hi + 1e-12
    assert (wl.argmax_score**p - y) ** 2 / 2 == pytest.approx(wl.value, rel=1e-12, abs=1e-300)


@given(st.integers(1, 3), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_worst_loss_is_monotone_in_eps(p, eps, seed):
    rng = np.random.default_rng(seed)
    m = RidgeModel(rng.standard_normal(3), p)
    x, y = rng.standard_normal(3), float(rng.standard_normal())
    a = worst_case_ls_loss(m, x, y, eps, L2).value
    b = worst_case_ls_loss(m, x, y, eps + 0.1, L2).value
    assert b >= a


def test_batched_inputs():
    m = RidgeModel([1.0, 2.0], 2)
    X = np.random.default_rng(1).standard_normal((6, 2))
    y = np.arange(6.0)
    vals = worst_case_ls_loss(m, X, y, 0.3, L2).value
    assert vals.shape == (6,)
    for i in range(6):
        assert vals[i] == worst_case_ls_loss(m, X[i], y[i], 0.3, L2).value


def test_dimension_and_parameter_checks():
    with pytest.raises(ValueError):
        RidgeModel([1.0], 0)
    with pytest.raises(ValueError):
        predict_ridge(RidgeModel([1.0, 2.0]), [1.0])
    with pytest.raises(ValueError):
        score_interval(RidgeModel([1.0]), [1.0], -0.1, L2)


def central_difference(m, x, y, eps, spec, h=1e-6):
    g = np.empty(m.dim)
    for j in range(m.dim):
        e = np.zeros(m.dim)
        e[j] = h
        hi = worst_case_ls_loss(RidgeModel(m.theta + e, m.degree), x, y, eps, spec).value
        lo = worst_case_ls_loss(RidgeModel(m.theta - e, m.degree), x, y, eps, spec).value
        g[j] = (hi - lo) / (2 * h)
    return g


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("spec", [L1, L2, NormSpec(3), LINF])
def test_danskin_gradient_matches_finite_differences(p, spec):
    rng = np.random.default_rng(p * 10 + int(min(spec.exponent, 9)))
    checked = 0
    while checked < 25:
        theta = rng.standard_normal(3)
        a = np.sort(np.abs(theta))
        if a[0] < 1e-2 or a[-1] - a[-2] < 1e-2:
            continue  # dual norm not differentiable nearby
        x, y, eps = rng.standard_normal(3), float(2 * rng.standard_normal()), 0.3
        m = RidgeModel(theta, p)
        iv = score_interval(m, x, eps, spec)
        ends = sorted([(iv.lo**p - y) ** 2, (iv.hi**p - y) ** 2])
        if ends[1] - ends[0] < 1e-6 or (p % 2 == 0 and min(abs(iv.lo), abs(iv.hi)) < 1e-3):
            continue
        g = adversarial_ls_gradient(m, x, y, eps, spec)
        fd = central_difference(m, x, y, eps, spec)
        assert np.max(np.abs(g - fd)) <= 1e-4 * max(np.max(np.abs(fd)), 1e-8)
        checked += 1


def test_gradient_at_zero_eps_is_the_ls_gradient():
    m = RidgeModel([0.5, -0.2], 3)
    x, y = np.array([1.0, 2.0]), 0.7
    s = x @ m.theta
    np.testing.assert_array_equal(adversarial_ls_gradient(m, x, y, 0.0, L2), (s**3 - y) * 3 * s**2 * x)


def test_softmax_examples():
    c = LinearClassifier(np.zeros((3, 2)))
    np.testing.assert_allclose(predict_softmax(c, [1.0, 2.0]), [1 / 3] * 3, rtol=1e-15)
    c = LinearClassifier(np.zeros((3, 2)), b=[800.0, 0.0, 0.0])
    assert predict_softmax(c, [0.0, 0.0])[0] == pytest.approx(1 - 2 * c.floor, abs=1e-15)
    c2 = LinearClassifier(np.zeros((2, 1)))
    np.testing.assert_allclose(c2.softmax_of_scores(np.array([1.0, 1.0])), [0.5, 0.5])


def test_softmax_floor_keeps_kl_finite():
    c = LinearClassifier(np.array([[50.0], [-50.0]]))
    p = predict_softmax(c, [10.0])
    assert p.min() >= c.floor
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


def test_argmax_region_examples():
    eye = LinearClassifier(np.eye(3))
    assert argmax_region(eye, [2.0, 1.0, 0.0]) == 0
    assert argmax_region(eye, [1.0, 1.0, 0.0]) == NO_UNIQUE_MAX
    assert argmax_region(LinearClassifier(np.eye(2)), [0.0, 1e-15]) == 1


def test_margin_slack_matches_sampled_worst_case():
    rng = np.random.default_rng(5)
    c = LinearClassifier(rng.standard_normal((3, 2)))
    x = rng.standard_normal(2)
    i = argmax_region(c, x)
    eps = 0.2
    sl = margin_slack(c, x, i, eps, L2)
    assert sl[0, i] == math.inf
    ang = np.linspace(0, 2 * np.pi, 20001)
    deltas = eps * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    z = c.scores(x + deltas)
    for j in range(3):
        if j != i:
            assert np.min(z[:, i] - z[:, j]) == pytest.approx(sl[0, j], abs=1e-7)
