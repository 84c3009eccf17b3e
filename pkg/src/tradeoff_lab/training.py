"""ERM and adversarial training of ridge models with exact inner maximisation.

Both fits run plain gradient descent with step ``step0 / sqrt(t)`` and halve
the step whenever the objective would increase, so the recorded objective
trace never goes up. The adversarial gradient follows the Danskin rule at the
exact worst perturbation (see ``models.adversarial_ls_gradient``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import DataSpec, sample_labels_batch, sample_x_batch
from .losses import LossKind
from .models import RidgeModel, adversarial_ls_gradient, worst_case_ls_loss
from .numerics import NormSpec
from .ridge_analysis import RidgeBoundInputs, tradeoff_bound
from .risk import VERDICT_SE, per_sample_terms
from .streams import Estimate, Purpose, normals

__all__ = [
    "TrainConfig",
    "FitResult",
    "FrontierRow",
    "training_set",
    "erm_fit",
    "adversarial_fit",
    "frontier_sweep",
    "DIVERGENCE_LOSS",
]

log = logging.getLogger(__name__)

DIVERGENCE_LOSS = 1e12
MAX_HALVINGS = 60


@dataclass(frozen=True)
class TrainConfig:
    step0: float = 0.1
    iterations: int = 500
    n: int = 256
    init: str = "zero"
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.init not in {"zero", "random-gaussian"}:
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class FitResult:
    theta: np.ndarray
    trace: list = field(default_factory=list)
    failed: bool = False
    message: str = ""

    @property
    def objective(self) -> float:
        return self.trace[-1] if self.trace else math.nan


def _derived_seed(seed: int, tag: str) -> int:
    words = [ord(ch) for ch in tag]
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *words]).generate_state(1, np.uint64)[0] >> 1)


def training_set(spec: DataSpec, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` training pairs; streams are disjoint from evaluation with the same seed."""
    tseed = _derived_seed(seed, "train")
    idx = np.arange(n)
    X = sample_x_batch(spec, tseed, idx)
    return X, sample_labels_batch(spec, tseed, idx, X, Purpose.LABEL)


def _initial_theta(d: int, cfg: TrainConfig) -> np.ndarray:
    if cfg.init == "zero":
        return np.zeros(d)
    return cfg.init_scale * normals(_derived_seed(cfg.seed, "init"), Purpose.INIT, [0], d)[0]


def _ls_objective(theta, X, y, p):
    s = X @ theta
    resid = s**p - y
    obj = float(np.mean(resid**2 / 2))
    grad = np.mean((resid * p * s ** (p - 1))[:, None] * X, axis=0)
    return obj, grad


def _adv_objective(theta, X, y, p, eps, spec):
    m = RidgeModel(theta, p)
    obj = float(np.mean(worst_case_ls_loss(m, X, y, eps, spec).value))
    grad = np.mean(adversarial_ls_gradient(m, X, y, eps, spec), axis=0)
    return obj, grad


def _descend(objective, theta0: np.ndarray, cfg: TrainConfig) -> FitResult:
    theta = theta0.copy()
    obj, grad = objective(theta)
    trace = [obj]
    if not math.isfinite(obj) or obj > DIVERGENCE_LOSS:
        return FitResult(theta, trace, True, f"initial objective {obj:.3e} exceeds divergence limit")
    for t in range(1, cfg.iterations + 1):
        if not np.any(grad):
            break
        step = cfg.step0 / math.sqrt(t)
        for _ in range(MAX_HALVINGS):
            cand = theta - step * grad
            c_obj, c_grad = objective(cand)
            if math.isfinite(c_obj) and c_obj <= obj:
                break
            step /= 2
        else:
            log.debug("no descent step after %d halvings at iteration %d", MAX_HALVINGS, t)
            break
        theta, obj, grad = cand, c_obj, c_grad
        trace.append(obj)
    return FitResult(theta, trace)


def _check_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size or X.shape[0] < 1:
        raise ValueError("need X of shape (n, d) and y of length n >= 1")
    return X, y


def erm_fit(X, y, p: int, cfg: TrainConfig, theta0=None) -> FitResult:
    """Minimise ``(1/n) sum (<theta, x_i>^p - y_i)^2 / 2``."""
    X, y = _check_data(X, y)
    theta0 = _initial_theta(X.shape[1], cfg) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    return _descend(lambda th: _ls_objective(th, X, y, p), theta0, cfg)


def adversarial_fit(X, y, p: int, eps: float, spec: NormSpec, cfg: TrainConfig, theta0=None) -> FitResult:
    """Minimise ``(1/n) sum sup_{||delta_i|| <= eps} (<theta, x_i + delta_i>^p - y_i)^2 / 2``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    X, y = _check_data(X, y)
    theta0 = _initial_theta(X.shape[1], cfg) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    return _descend(lambda th: _adv_objective(th, X, y, p, eps, spec), theta0, cfg)


@dataclass(frozen=True)
class FrontierRow:
    eps: float
    theta_hat: np.ndarray
    R: Estimate | None
    R_eps: Estimate | None
    L_eps: Estimate | None
    bound: float
    lhs_se: float = 0.0
    objective: float = math.nan
    steps: int = 0
    failed: bool = False
    message: str = ""

    @property
    def verdict(self) -> bool:
        """``R + R_eps + 3 SE >= bound``."""
        if self.failed:
            return False
        return self.R.value + self.R_eps.value + VERDICT_SE * self.lhs_se >= self.bound


def frontier_sweep(
    spec: DataSpec,
    eps_grid,
    norm_spec: NormSpec,
    cfg: TrainConfig,
    eval_n: int,
    seed: int,
    *,
    threads=None,
) -> list[FrontierRow]:
    """Adversarially train at each eps and evaluate population risks at the fit.

    Training data is shared across the grid; evaluation draws fresh samples
    from ``seed``. A diverged fit yields a row marked ``failed``.
    """
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid:
        raise ValueError("empty eps grid")
    if spec.task != "regression":
        raise ValueError("frontier sweeps need a regression spec")
    X, y = training_set(spec, cfg.n, cfg.seed)
    rows = []
    for eps in eps_grid:
        fit = adversarial_fit(X, y, spec.degree, eps, norm_spec, cfg)
        if fit.failed:
            rows.append(
                FrontierRow(eps, fit.theta, None, None, None, math.nan, objective=fit.objective,
                            steps=len(fit.trace) - 1, failed=True, message=fit.message)
            )
            continue
        model = RidgeModel(fit.theta, spec.degree)
        vals, _ = per_sample_terms(
            model,
            LossKind.LS,
            spec,
            eval_n,
            seed,
            eps=eps,
            norm_spec=norm_spec,
            terms=("standard", "adversarial", "smoothness_sq"),
            threads=threads,
        )
        R = Estimate.from_samples(vals["standard"], seed)
        R_eps = Estimate.from_samples(vals["adversarial"], seed)
        L = Estimate.from_samples(vals["smoothness_sq"], seed)
        lhs = Estimate.from_samples(vals["standard"] + vals["adversarial"], seed)
        bound = tradeoff_bound(RidgeBoundInputs.from_model(model, spec.cov, norm_spec, eps, spec.sigma2))
        rows.append(FrontierRow(eps, fit.theta, R, R_eps, L, bound, lhs.std_error, fit.objective, len(fit.trace) - 1))
    return rows
