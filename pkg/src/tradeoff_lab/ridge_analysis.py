"""Closed-form bounds for least squares over ridge functions ``<theta, x>^p``.

With ``a = ||theta||_Sigma`` and ``t = eps ||theta||_*``:

* ``L_eps(f_theta) >= ((a + t)^p - a^p)^2 / 2``
* ``R + R_eps >= max(((a + t)^p - a^p)^2 / 12, sigma^2 / 3)``
* robustness needs ``eps`` below
  ``min((C_p^p / p) sqrt(lambda*/SNR_p), C_p sqrt(lambda*/SNR_p^(1/p)))``.

``binomial_chain_audit`` re-evaluates every intermediate quantity of the
lower-bound derivation by Monte Carlo so each link can be checked separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .distributions import DataSpec, sample_x_batch
from .models import RidgeModel
from .numerics import Covariance, NormSpec, dual_norm, lambda_star, lambda_star_all_ones, sigma_norm
from .streams import Estimate, map_chunks

__all__ = [
    "RidgeBoundInputs",
    "ThresholdResult",
    "ChainLink",
    "ChainAudit",
    "l_eps_lower_bound",
    "tradeoff_bound",
    "epsilon_threshold",
    "threshold_readings",
    "binomial_chain_audit",
    "CHAIN_TERMS",
]


@dataclass(frozen=True)
class RidgeBoundInputs:
    theta_sigma: float
    theta_dual: float
    degree: int
    eps: float
    sigma2: float = 0.0
    theta: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("theta_sigma", "theta_dual", "eps", "sigma2"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be a positive integer")

    @classmethod
    def from_model(cls, m: RidgeModel, cov: Covariance, spec: NormSpec, eps: float, sigma2: float = 0.0):
        return cls(
            float(sigma_norm(m.theta, cov)),
            float(dual_norm(m.theta, spec)),
            m.degree,
            float(eps),
            float(sigma2),
            m.theta,
        )

    @property
    def t(self) -> float:
        return self.theta_dual * self.eps

    def gap(self) -> float:
        """``(a + t)^p - a^p`` via its binomial sum (no cancellation)."""
        p, a, t = self.degree, self.theta_sigma, self.t
        return math.fsum(comb(p, k) * a ** (p - k) * t**k for k in range(1, p + 1))


def l_eps_lower_bound(inp: RidgeBoundInputs) -> float:
    return 0.5 * inp.gap() ** 2


def tradeoff_bound(inp: RidgeBoundInputs) -> float:
    return max(inp.gap() ** 2 / 12, inp.sigma2 / 3)


@dataclass(frozen=True)
class ThresholdResult:
    value: float
    power_branch: float
    root_branch: float


def epsilon_threshold(p: int, c_p: float, lambda_star: float, snr_p: float) -> ThresholdResult:
    """Perturbation size above which robustness forces a loss of accuracy."""
    if not snr_p > 0:
        raise ValueError("SNR_p must be positive")
    if p < 1 or c_p <= 0 or lambda_star < 0:
        raise ValueError("need p >= 1, C_p > 0, lambda* >= 0")
    power = (c_p**p / p) * math.sqrt(lambda_star / snr_p)
    root = c_p * math.sqrt(lambda_star / snr_p ** (1.0 / p))
    return ThresholdResult(min(power, root), power, root)


def threshold_readings(cov: Covariance, spec: NormSpec, p: int, c_p: float, snr: float) -> dict:
    """The threshold under lambda* as a supremum and at the all-ones direction.

    The two coincide for l2 perturbations with isotropic Sigma; for
    ``Sigma = I`` and l_inf perturbations they are ``1`` and ``1/d``.
    """
    sup = lambda_star(cov, spec, "closed-form")
    ones = lambda_star_all_ones(cov, spec)
    return {
        "supremum": (sup, epsilon_threshold(p, c_p, sup, snr)),
        "all_ones": (ones, epsilon_threshold(p, c_p, ones, snr)),
    }


CHAIN_TERMS = (
    "exact",          # E((s + t)^p - s^p)^2
    "expansion",      # E(sum_{k=1..p} C(p,k) s^(p-k) t^k)^2
    "split",          # t^(2p) + E(sum_{k=1..p-1} ...)^2
    "double_sum",     # t^(2p) + sum_j sum_k C C E s^(2p-j-k) t^(j+k)
    "moment_bound",   # same with E s^m replaced by a^m
    "square_form",    # t^(2p) + (sum_{k=1..p-1} C(p,k) a^(p-k) t^k)^2
    "final",          # ((a + t)^p - a^p)^2 / 2
)
_RELATIONS = ("=", ">=", "=", ">=", "=", ">=")


@dataclass(frozen=True)
class ChainLink:
    left: str
    right: str
    relation: str
    diff: Estimate
    ok: bool


@dataclass(frozen=True)
class ChainAudit:
    terms: dict
    links: list

    @property
    def ok(self) -> bool:
        return all(link.ok for link in self.links)


def _chain_samples(s: np.ndarray, t: float, a: float, p: int) -> np.ndarray:
    n = s.size
    out = np.empty((n, len(CHAIN_TERMS)))
    out[:, 0] = (s + t) ** p - s**p
    out[:, 0] **= 2
    full = sum(comb(p, k) * s ** (p - k) * t**k for k in range(1, p + 1))
    out[:, 1] = full**2
    head = sum((comb(p, k) * s ** (p - k) * t**k for k in range(1, p)), np.zeros(n))
    out[:, 2] = t ** (2 * p) + head**2
    dbl = np.zeros(n)
    mom = 0.0
    for j in range(1, p):
        for k in range(1, p):
            c = comb(p, j) * comb(p, k) * t ** (j + k)
            dbl = dbl + c * s ** (2 * p - j - k)
            mom += c * a ** (2 * p - j - k)
    out[:, 3] = t ** (2 * p) + dbl
    out[:, 4] = t ** (2 * p) + mom
    sq = sum(comb(p, k) * a ** (p - k) * t**k for k in range(1, p))
    out[:, 5] = t ** (2 * p) + sq**2
    gap = sum(comb(p, k) * a ** (p - k) * t**k for k in range(1, p + 1))
    out[:, 6] = 0.5 * gap**2
    return out


def binomial_chain_audit(
    inp: RidgeBoundInputs, spec: DataSpec, n: int, seed: int, *, threads=None, n_se: float = 3.0
) -> ChainAudit:
    """Monte Carlo values of every quantity in the L_eps lower-bound chain.

    Each adjacent pair is checked on shared samples: ``=`` links must agree
    and ``>=`` links must be ordered, both within ``n_se`` standard errors of
    the paired difference (plus a 1e-10 relative floor for rounding).
    """
    if inp.theta is None:
        raise ValueError("the chain audit needs theta (use RidgeBoundInputs.from_model)")
    theta = np.asarray(inp.theta, dtype=np.float64)
    p, t, a = inp.degree, inp.t, inp.theta_sigma

    def chunk(idx):
        s = np.abs(sample_x_batch(spec, seed, idx) @ theta)
        return _chain_samples(s, t, a, p)

    table = map_chunks(chunk, n, threads)
    terms = {name: Estimate.from_samples(table[:, i], seed) for i, name in enumerate(CHAIN_TERMS)}
    links = []
    for i, rel in enumerate(_RELATIONS):
        left, right = CHAIN_TERMS[i], CHAIN_TERMS[i + 1]
        diff = Estimate.from_samples(table[:, i] - table[:, i + 1], seed)
        floor = 1e-10 * max(abs(terms[left].value), abs(terms[right].value))
        slack = n_se * diff.std_error + floor
        ok = abs(diff.value) <= slack if rel == "=" else diff.value >= -slack
        links.append(ChainLink(left, right, rel, diff, bool(ok)))
    return ChainAudit(terms, links)
