"""Certificate-pair losses and Monte Carlo audits of the accuracy/robustness trade-off."""

from .distributions import DataSpec, c_p_constant, classification_spec, regression_spec, snr_p
from .geometry import adv01_loss_exact, core_membership, cor3_report, in_core_mask
from .losses import LossKind, check_pair_conditions, eval_A, eval_B, eval_loss
from .models import (
    LinearClassifier,
    RidgeModel,
    adversarial_ls_gradient,
    output_range,
    predict_ridge,
    predict_softmax,
    score_interval,
    worst_case_deviation,
    worst_case_ls_loss,
)
from .numerics import Covariance, NormSpec, dual_norm, lambda_star, norm, sigma_norm
from .ridge_analysis import (
    RidgeBoundInputs,
    binomial_chain_audit,
    epsilon_threshold,
    l_eps_lower_bound,
    threshold_readings,
    tradeoff_bound,
)
from .risk import (
    BoundReport,
    adversarial_risk,
    label_spread,
    local_smoothness,
    standard_risk,
    theorem1_report,
)
from .streams import Estimate
from .training import TrainConfig, adversarial_fit, erm_fit, frontier_sweep

__all__ = [
    "BoundReport",
    "Covariance",
    "DataSpec",
    "Estimate",
    "LinearClassifier",
    "LossKind",
    "NormSpec",
    "RidgeBoundInputs",
    "RidgeModel",
    "TrainConfig",
    "adv01_loss_exact",
    "adversarial_fit",
    "adversarial_ls_gradient",
    "adversarial_risk",
    "binomial_chain_audit",
    "c_p_constant",
    "check_pair_conditions",
    "classification_spec",
    "core_membership",
    "cor3_report",
    "dual_norm",
    "epsilon_threshold",
    "erm_fit",
    "eval_A",
    "eval_B",
    "eval_loss",
    "frontier_sweep",
    "in_core_mask",
    "l_eps_lower_bound",
    "label_spread",
    "lambda_star",
    "local_smoothness",
    "norm",
    "output_range",
    "predict_ridge",
    "predict_softmax",
    "regression_spec",
    "score_interval",
    "sigma_norm",
    "snr_p",
    "standard_risk",
    "theorem1_report",
    "threshold_readings",
    "tradeoff_bound",
    "worst_case_deviation",
    "worst_case_ls_loss",
]
