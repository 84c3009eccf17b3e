"""Polynomial ridge predictors and affine softmax classifiers.

For a ridge model ``f(x) = <theta, x>^p`` every question about the eps-ball
around ``x`` reduces to the score interval ``[s - r, s + r]`` with
``s = <theta, x>`` and ``r = eps * ||theta||_*``, so the inner suprema are
computed exactly rather than by ascent. Functions accept a single ``x`` of
shape ``(d,)`` or a batch ``(n, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .losses import NO_UNIQUE_MAX, unique_argmax
from .numerics import NormSpec, dual_attainment, dual_norm

__all__ = [
    "RidgeModel",
    "LinearClassifier",
    "Interval",
    "WorstCaseLoss",
    "predict_ridge",
    "score_interval",
    "output_range",
    "worst_case_deviation",
    "worst_case_ls_loss",
    "adversarial_ls_gradient",
    "predict_softmax",
    "argmax_region",
    "margin_slack",
    "SOFTMAX_FLOOR",
]

SOFTMAX_FLOOR = 1e-12


@dataclass(frozen=True)
class RidgeModel:
    theta: np.ndarray
    degree: int = 1

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be a positive integer, got {self.degree!r}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "degree", int(self.degree))

    @property
    def dim(self) -> int:
        return self.theta.size


class Interval(NamedTuple):
    lo: np.ndarray | float
    hi: np.ndarray | float


class WorstCaseLoss(NamedTuple):
    value: np.ndarray | float
    argmax_score: np.ndarray | float


def _scores(m: RidgeModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != m.dim:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1]}, theta has {m.dim}")
    return x @ m.theta


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def predict_ridge(m: RidgeModel, x):
    return _out(_scores(m, x) ** m.degree)


def score_interval(m: RidgeModel, x, eps: float, spec: NormSpec) -> Interval:
    """Exact range of ``<theta, x + delta>`` over ``||delta|| <= eps``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    s = _scores(m, x)
    r = eps * dual_norm(m.theta, spec)
    return Interval(_out(s - r), _out(s + r))


def _range_from_scores(a, b, p):
    """Output range of z -> z^p on [a, b] plus the scores realising it."""
    fa, fb = a**p, b**p
    a_is_low = fa <= fb
    lo = np.where(a_is_low, fa, fb)
    z_lo = np.where(a_is_low, a, b)
    hi = np.where(a_is_low, fb, fa)
    z_hi = np.where(a_is_low, b, a)
    # equal endpoint values (p even, a = -b): the maximum sits at the lower score
    z_hi = np.where(fa == fb, a, z_hi)
    if p % 2 == 0:
        crossing = (a < 0) & (b > 0)
        lo = np.where(crossing, 0.0, lo)
        z_lo = np.where(crossing, 0.0, z_lo)
    return lo, hi, z_lo, z_hi


def output_range(m: RidgeModel, x, eps: float, spec: NormSpec) -> Interval:
    """Exact range of ``<theta, x + delta>^p`` over the eps-ball."""
    a, b = score_interval(m, x, eps, spec)
    lo, hi, _, _ = _range_from_scores(np.asarray(a), np.asarray(b), m.degree)
    return Interval(_out(lo), _out(hi))


def worst_case_deviation(m: RidgeModel, x, eps: float, spec: NormSpec):
    """``sup |f(x + delta) - f(x)| = (|s| + r)^p - |s|^p``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    s = np.abs(_scores(m, x))
    r = eps * dual_norm(m.theta, spec)
    return _out((s + r) ** m.degree - s**m.degree)


def worst_case_ls_loss(m: RidgeModel, x, y, eps: float, spec: NormSpec) -> WorstCaseLoss:
    """``sup_delta (f(x + delta) - y)^2 / 2`` by endpoint evaluation.

    The square is convex in the output, so the supremum over the output range
    sits at one of its two ends. Ties go to the lower end of the output
    range. ``argmax_score`` is the score ``<theta, x + delta*>`` attaining it
    (0 when the lower end of an even-degree range is the interior zero).
    """
    a, b = score_interval(m, x, eps, spec)
    lo, hi, z_lo, z_hi = _range_from_scores(np.asarray(a), np.asarray(b), m.degree)
    y = np.asarray(y, dtype=np.float64)
    loss_lo = (lo - y) ** 2 / 2
    loss_hi = (hi - y) ** 2 / 2
    take_hi = loss_hi > loss_lo
    return WorstCaseLoss(
        _out(np.where(take_hi, loss_hi, loss_lo)),
        _out(np.where(take_hi, z_hi, z_lo)),
    )


def adversarial_ls_gradient(m: RidgeModel, x, y, eps: float, spec: NormSpec) -> np.ndarray:
    """Gradient in theta of ``worst_case_ls_loss`` (Danskin rule).

    The worst perturbation is held fixed at its maximiser and the ordinary LS
    gradient is taken there: ``(z^p - y) p z^(p-1) (x + delta*)``. Returns an
    array shaped like ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    p = m.degree
    s = _scores(m, x)
    r = eps * dual_norm(m.theta, spec)
    z = np.asarray(worst_case_ls_loss(m, x, y, eps, spec).argmax_score)
    u = dual_attainment(m.theta, spec)
    # signed step along u that moves the score from s to z
    if r > 0:
        step = np.where(z == s + r, 1.0, np.where(z == s - r, -1.0, (z - s) / r))
    else:
        step = np.zeros_like(s)
    x_adv = x + (eps * step)[..., None] * u
    resid = z**p - np.asarray(y, dtype=np.float64)
    return (resid * p * z ** (p - 1))[..., None] * x_adv


@dataclass(frozen=True)
class LinearClassifier:
    """Affine scores ``W x + b`` with an optional floored softmax head."""

    W: np.ndarray
    b: np.ndarray | None = None
    floor: float = SOFTMAX_FLOOR

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 2:
            raise ValueError(f"W must be k x d with k >= 2, got shape {W.shape}")
        b = np.zeros(W.shape[0]) if self.b is None else np.array(self.b, dtype=np.float64).reshape(-1)
        if b.shape != (W.shape[0],):
            raise ValueError("bias length must equal the number of classes")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("classifier parameters must be finite")
        if not 0 <= self.floor < 1.0 / W.shape[0]:
            raise ValueError("softmax floor must lie in [0, 1/k)")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def scores(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: x has {x.shape[-1]}, W has {self.dim}")
        return x @ self.W.T + self.b

    def softmax_of_scores(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        sm = e / e.sum(axis=-1, keepdims=True)
        k = self.n_classes
        return (1.0 - k * self.floor) * sm + self.floor


def predict_softmax(c: LinearClassifier, x) -> np.ndarray:
    """Floored softmax: ``(1 - k*eta) softmax(Wx + b) + eta``, entries >= eta."""
    return c.softmax_of_scores(c.scores(x))


def argmax_region(c: LinearClassifier, x):
    """Class whose score is strictly largest, else ``NO_UNIQUE_MAX``."""
    idx = unique_argmax(c.scores(x))
    return int(idx) if np.ndim(idx) == 0 else idx


def margin_slack(c: LinearClassifier, x, cls, eps: float, spec: NormSpec) -> np.ndarray:
    """Per-pair slack ``(s_i - s_j)(x) - eps * ||w_i - w_j||_*`` for class ``i = cls``.

    Shape ``(n, k)``; the ``j = i`` column is ``+inf``. All entries positive
    means every point of the eps-ball keeps ``i`` as the unique argmax. With
    ``eps = 0`` the slack is the raw margin.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    z = np.atleast_2d(c.scores(x))
    cls = np.broadcast_to(np.asarray(cls, dtype=np.int64), z.shape[:1])
    rows = np.arange(z.shape[0])
    own = z[rows, cls][:, None]
    margins = own - z
    if eps > 0:
        diffs = c.W[:, None, :] - c.W[None, :, :]
        thresh = eps * dual_norm(diffs, spec)  # thresh[i, j] = eps ||w_i - w_j||_*
        margins = margins - thresh[cls]
    margins[rows, cls] = np.inf
    return margins
