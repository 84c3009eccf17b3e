"""Monte Carlo estimators for R, R_eps, L_eps, E B(Y, Y') and the trade-off bound.

All estimators draw sample ``i`` from the counter streams of ``seed``, so
two estimators called with the same ``(seed, n)`` see the same ``X_i`` and
``Y_i``; ``Y'_i`` comes from a separate label stream at the same ``X_i``.

Inner suprema are exact for ridge + LS, binary softmax + KL, and affine
scores + 0/1. For softmax + KL with k > 2 the per-sample values are the best
of a finite candidate set of perturbations (certified lower bounds), and the
resulting ``Estimate`` carries ``exact=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DataSpec, sample_labels_batch, sample_x_batch
from .losses import NO_UNIQUE_MAX, PAIR_TOL, LossKind, eval_A, eval_B, eval_loss, unique_argmax
from .models import (
    LinearClassifier,
    RidgeModel,
    margin_slack,
    worst_case_deviation,
    worst_case_ls_loss,
)
from .numerics import NormSpec, dual_attainment, norm
from .streams import Estimate, Purpose, map_chunks, normals

__all__ = [
    "Estimate",
    "BoundReport",
    "PointwiseCheck",
    "standard_risk",
    "adversarial_risk",
    "local_smoothness",
    "label_spread",
    "theorem1_report",
    "pointwise_check",
    "ridge_risk_decomposition",
    "per_sample_terms",
    "RANDOM_CANDIDATES",
    "VERDICT_SE",
]

RANDOM_CANDIDATES = 32
VERDICT_SE = 3.0


@dataclass(frozen=True)
class BoundReport:
    """Both sides of ``R + R_eps >= max(smoothness term, label term)``."""

    smoothness_term: Estimate
    label_term: Estimate
    bound: float
    lhs: Estimate
    combined_se: float
    verdict: bool
    exact: bool

    @property
    def slack(self) -> float:
        return self.lhs.value - self.bound


def _check_compat(predictor, kind: LossKind, spec: DataSpec):
    kind = LossKind(kind)
    if isinstance(predictor, RidgeModel):
        if kind is not LossKind.LS or spec.task != "regression":
            raise ValueError("ridge models pair with LS loss on regression data")
        if predictor.dim != spec.dim:
            raise ValueError("model and data dimensions differ")
    elif isinstance(predictor, LinearClassifier):
        if kind is LossKind.LS or spec.task != "classification":
            raise ValueError("classifiers pair with KL or 0/1 loss on classification data")
        if predictor.dim != spec.dim or predictor.n_classes != spec.n_classes:
            raise ValueError("classifier and data shapes differ")
    else:
        raise TypeError(f"unsupported predictor {type(predictor).__name__}")
    return kind


def _standard(predictor, kind, x, y):
    if isinstance(predictor, RidgeModel):
        return eval_loss(kind, (x @ predictor.theta) ** predictor.degree, y)
    if kind is LossKind.KL:
        return eval_loss(kind, predictor.softmax_of_scores(predictor.scores(x)), y)
    return eval_loss(kind, predictor.scores(x), y)


def _random_boundary(seed, idx, d, spec: NormSpec, eps: float) -> np.ndarray:
    """``RANDOM_CANDIDATES`` perturbations of norm exactly eps per sample."""
    v = normals(seed, Purpose.PERTURB, idx, RANDOM_CANDIDATES * d).reshape(len(idx), RANDOM_CANDIDATES, d)
    nv = norm(v, spec)[..., None]
    return eps * v / np.where(nv > 0, nv, 1.0)


def _pair_directions(c: LinearClassifier, spec: NormSpec) -> np.ndarray:
    """Unit attainment vectors of ``w_i - w_j`` for every ordered pair i != j."""
    k = c.n_classes
    dirs = [dual_attainment(c.W[i] - c.W[j], spec) for i in range(k) for j in range(k) if i != j]
    return np.array(dirs)


def _kl_adversarial(c: LinearClassifier, x, y, eps, spec, seed, idx):
    cls = np.argmax(y, axis=-1)
    k = c.n_classes
    if k == 2:
        other = 1 - cls
        delta = -eps * dual_attainment(c.W[cls] - c.W[other], spec)
        u = c.softmax_of_scores(c.scores(x + delta))
        return eval_loss(LossKind.KL, u, y)
    best = eval_loss(LossKind.KL, c.softmax_of_scores(c.scores(x)), y)
    if eps == 0:
        return best
    for j in range(k):
        w = c.W[cls] - c.W[j]
        same = cls == j
        delta = -eps * dual_attainment(np.where(same[:, None], c.W[(j + 1) % k] - c.W[j], w), spec)
        u = c.softmax_of_scores(c.scores(x + delta))
        best = np.maximum(best, eval_loss(LossKind.KL, u, y))
    rnd = _random_boundary(seed, idx, c.dim, spec, eps)
    for t in range(RANDOM_CANDIDATES):
        u = c.softmax_of_scores(c.scores(x + rnd[:, t]))
        best = np.maximum(best, eval_loss(LossKind.KL, u, y))
    return best


def _inner_exact(predictor, kind: LossKind, eps: float) -> bool:
    """Whether the per-sample inner supremum is computed exactly."""
    if isinstance(predictor, RidgeModel) or kind is LossKind.ZERO_ONE:
        return True
    return predictor.n_classes == 2 or eps == 0


def _adversarial(predictor, kind, x, y, eps, spec, seed, idx):
    if isinstance(predictor, RidgeModel):
        return worst_case_ls_loss(predictor, x, y, eps, spec).value
    if kind is LossKind.KL:
        return _kl_adversarial(predictor, x, y, eps, spec, seed, idx)
    # the label class must stay the unique argmax on the whole ball
    slack = margin_slack(predictor, x, np.argmax(y, axis=-1), eps, spec)
    return np.where(np.all(slack > 0, axis=-1), 0.0, 1.0)


def _smoothness_sq(predictor, x, eps, spec, seed, idx):
    """Per-sample ``sup ||f(x + delta) - f(x)||_1^2``."""
    if isinstance(predictor, RidgeModel):
        return worst_case_deviation(predictor, x, eps, spec) ** 2
    c = predictor
    base = c.softmax_of_scores(c.scores(x))
    if eps == 0:
        return np.zeros(len(x))
    if c.n_classes == 2:
        u = dual_attainment(c.W[0] - c.W[1], spec)
        best = np.zeros(len(x))
        for sgn in (1.0, -1.0):
            moved = c.softmax_of_scores(c.scores(x + sgn * eps * u))
            best = np.maximum(best, np.abs(moved - base).sum(axis=-1) ** 2)
        return best
    best = np.zeros(len(x))
    for u in _pair_directions(c, spec):
        moved = c.softmax_of_scores(c.scores(x + eps * u))
        best = np.maximum(best, np.abs(moved - base).sum(axis=-1) ** 2)
    rnd = _random_boundary(seed, idx, c.dim, spec, eps)
    for t in range(RANDOM_CANDIDATES):
        moved = c.softmax_of_scores(c.scores(x + rnd[:, t]))
        best = np.maximum(best, np.abs(moved - base).sum(axis=-1) ** 2)
    return best


def _not_in_core(c: LinearClassifier, x, eps, spec):
    z = c.scores(x)
    top = unique_argmax(z)
    slack = margin_slack(c, x, np.where(top == NO_UNIQUE_MAX, 0, top), eps, spec)
    inside = (top != NO_UNIQUE_MAX) & np.all(slack > 0, axis=-1)
    return np.where(inside, 0.0, 1.0)


def per_sample_terms(
    predictor,
    kind,
    spec: DataSpec,
    n: int,
    seed: int,
    *,
    eps: float = 0.0,
    norm_spec: NormSpec | None = None,
    terms=("standard",),
    threads=None,
):
    """Per-sample values of the requested terms on shared draws.

    Terms: ``standard``, ``adversarial``, ``smoothness_sq`` (the L_eps
    integrand), ``smoothness_b`` (``sup B(f(X), f(X + delta))``) and
    ``label`` (``B(Y, Y')``). Returns ``(values, exact)`` dictionaries.
    """
    kind = _check_compat(predictor, kind, spec)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    norm_spec = norm_spec or NormSpec(2)
    terms = tuple(terms)
    unknown = set(terms) - {"standard", "adversarial", "smoothness_sq", "smoothness_b", "label"}
    if unknown:
        raise ValueError(f"unknown terms {sorted(unknown)}")
    inner = _inner_exact(predictor, kind, eps)
    exact = {t: inner if t in {"adversarial", "smoothness_sq"} else True for t in terms}
    if "smoothness_b" in exact:
        exact["smoothness_b"] = inner

    def chunk(idx):
        x = sample_x_batch(spec, seed, idx)
        y = sample_labels_batch(spec, seed, idx, x, Purpose.LABEL)
        cols = []
        for t in terms:
            if t == "standard":
                v = _standard(predictor, kind, x, y)
            elif t == "adversarial":
                v = _adversarial(predictor, kind, x, y, eps, norm_spec, seed, idx)
            elif t == "smoothness_sq":
                v = _smoothness_sq(predictor, x, eps, norm_spec, seed, idx)
            elif t == "smoothness_b":
                if kind is LossKind.ZERO_ONE:
                    v = _not_in_core(predictor, x, eps, norm_spec)
                else:
                    v = _smoothness_sq(predictor, x, eps, norm_spec, seed, idx) / 6
            else:
                y2 = sample_labels_batch(spec, seed, idx, x, Purpose.LABEL_PRIME)
                v = eval_B(kind, y, y2)
            cols.append(np.asarray(v, dtype=np.float64))
        return np.stack(cols, axis=-1)

    table = map_chunks(chunk, n, threads)
    return {t: table[:, j] for j, t in enumerate(terms)}, exact


def standard_risk(predictor, kind, spec: DataSpec, n: int, seed: int, *, threads=None) -> Estimate:
    """``R(f) = E l(f(X), Y)``."""
    vals, _ = per_sample_terms(predictor, kind, spec, n, seed, threads=threads)
    return Estimate.from_samples(vals["standard"], seed)


def adversarial_risk(
    predictor, kind, spec: DataSpec, eps: float, norm_spec: NormSpec, n: int, seed: int, *, threads=None
) -> Estimate:
    """``R_eps(f) = E sup_{||delta|| <= eps} l(f(X + delta), Y)``."""
    vals, exact = per_sample_terms(
        predictor, kind, spec, n, seed, eps=eps, norm_spec=norm_spec, terms=("adversarial",), threads=threads
    )
    return Estimate.from_samples(vals["adversarial"], seed, exact["adversarial"])


def local_smoothness(predictor, spec: DataSpec, eps: float, norm_spec: NormSpec, n: int, seed: int, *, threads=None):
    """Mean local smoothness ``L_eps(f) = E sup ||f(X + delta) - f(X)||_1^2``."""
    kind = LossKind.LS if isinstance(predictor, RidgeModel) else LossKind.KL
    vals, exact = per_sample_terms(
        predictor, kind, spec, n, seed, eps=eps, norm_spec=norm_spec, terms=("smoothness_sq",), threads=threads
    )
    return Estimate.from_samples(vals["smoothness_sq"], seed, exact["smoothness_sq"])


def label_spread(kind, spec: DataSpec, n: int, seed: int, *, threads=None) -> Estimate:
    """``E B(Y, Y')`` with ``Y, Y'`` i.i.d. given ``X``."""
    kind = LossKind(kind)

    def chunk(idx):
        x = sample_x_batch(spec, seed, idx)
        y = sample_labels_batch(spec, seed, idx, x, Purpose.LABEL)
        y2 = sample_labels_batch(spec, seed, idx, x, Purpose.LABEL_PRIME)
        return eval_B(kind, y, y2)

    return Estimate.from_samples(map_chunks(chunk, n, threads), seed)


def _verdict(lhs: Estimate, term: Estimate, bound: float) -> tuple[bool, float]:
    se = math.hypot(lhs.std_error, term.std_error)
    return lhs.value + VERDICT_SE * se >= bound - VERDICT_SE * se, se


def theorem1_report(
    predictor, kind, spec: DataSpec, eps: float, norm_spec: NormSpec, n: int, seed: int, *, threads=None
) -> BoundReport:
    """Assemble ``R + R_eps`` against ``max(E sup B(f(X), f(X+delta)), E B(Y, Y'))``.

    For LS and KL the smoothness term is ``L_eps / 6``; for 0/1 it is the
    probability of falling outside every eps-core.
    """
    kind = LossKind(kind)
    shared = dict(eps=eps, norm_spec=norm_spec, threads=threads)
    if kind is LossKind.ZERO_ONE:
        terms = ("standard", "adversarial", "smoothness_b", "label")
    else:
        terms = ("standard", "adversarial", "smoothness_sq", "label")
    vals, exact = per_sample_terms(predictor, kind, spec, n, seed, terms=terms, **shared)
    lhs = Estimate.from_samples(vals["standard"] + vals["adversarial"], seed, exact["adversarial"])
    if kind is LossKind.ZERO_ONE:
        smooth = Estimate.from_samples(vals["smoothness_b"], seed)
    else:
        L = Estimate.from_samples(vals["smoothness_sq"], seed, exact["smoothness_sq"])
        smooth = Estimate(L.value / 6, L.std_error / 6, L.n, seed, L.exact)
    label = Estimate.from_samples(vals["label"], seed)
    bound = max(smooth.value, label.value)
    ok, se = _verdict(lhs, smooth if smooth.value >= label.value else label, bound)
    return BoundReport(smooth, label, bound, lhs, se, ok, lhs.exact and smooth.exact)


@dataclass(frozen=True)
class PointwiseCheck:
    ineq1: bool
    ineq2: bool
    slack1: float
    slack2: float


def pointwise_check(kind, u, u2, y, y2) -> PointwiseCheck:
    """The two inequalities behind the bound, before the supremum is taken.

    ``l(u, y) + l(u2, y) >= B(u, u2)`` and
    ``l(u, y) + l(u2, y2) >= B(y, y2) - A(u, u2)``, where ``u = f(x)`` and
    ``u2 = f(x + delta)``. Vectorised over a leading axis.
    """
    kind = LossKind(kind)
    lu = eval_loss(kind, u, y)
    s1 = lu + eval_loss(kind, u2, y) - eval_B(kind, u, u2)
    s2 = lu + eval_loss(kind, u2, y2) - (eval_B(kind, y, y2) - eval_A(kind, u, u2))
    return PointwiseCheck(s1 >= -PAIR_TOL, s2 >= -PAIR_TOL, s1, s2)


def ridge_risk_decomposition(m: RidgeModel, spec: DataSpec, n: int, seed: int, *, threads=None) -> Estimate:
    """``E (f_theta(X) - f_theta*(X))^2 / 2 + sigma^2 / 2`` on the draws of ``standard_risk``.

    With the halved LS loss both parts carry the factor 1/2.
    """
    _check_compat(m, LossKind.LS, spec)

    def chunk(idx):
        x = sample_x_batch(spec, seed, idx)
        return ((x @ m.theta) ** m.degree - (x @ spec.theta_star) ** spec.degree) ** 2 / 2

    est = Estimate.from_samples(map_chunks(chunk, n, threads), seed)
    return Estimate(est.value + spec.sigma2 / 2, est.std_error, n, seed)
