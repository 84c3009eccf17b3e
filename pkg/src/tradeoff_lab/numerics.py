"""p-norms, their duals, covariance-weighted norms and the constant lambda*.

All vector routines reduce over the last axis, so a batch of vectors can be
passed as an ``(n, d)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NormSpec",
    "Covariance",
    "norm",
    "dual_norm",
    "dual_attainment",
    "sigma_norm",
    "dual_ratio",
    "lambda_star",
    "lambda_star_all_ones",
]

SYMMETRY_TOL = 1e-12
EIGEN_TOL = 1e-10


def _as_exponent(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in {"inf", "infinity", "linf"}:
            return math.inf
        value = float(value)
    return float(value)


@dataclass(frozen=True)
class NormSpec:
    """Perturbation norm ``||.||_p``; the dual exponent q has 1/p + 1/q = 1."""

    exponent: float = 2.0

    def __post_init__(self):
        p = _as_exponent(self.exponent)
        if math.isnan(p) or p < 1:
            raise ValueError(f"norm exponent must lie in [1, inf], got {self.exponent!r}")
        object.__setattr__(self, "exponent", p)

    @property
    def dual_exponent(self) -> float:
        p = self.exponent
        if p == 1:
            return math.inf
        if math.isinf(p):
            return 1.0
        return p / (p - 1)

    @property
    def dual(self) -> "NormSpec":
        return NormSpec(self.dual_exponent)

    @property
    def label(self) -> str:
        return "inf" if math.isinf(self.exponent) else f"{self.exponent:g}"


def _check_finite(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def _pnorm(v: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(v)
    if p == 1:
        return a.sum(axis=-1)
    if p == 2:
        return np.sqrt((a * a).sum(axis=-1))
    if math.isinf(p):
        return a.max(axis=-1)
    # scale by the max entry so large exponents do not overflow
    m = a.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    return np.squeeze(safe, -1) * ((a / safe) ** p).sum(axis=-1) ** (1.0 / p)


def norm(v, spec: NormSpec):
    """The perturbation norm ``||v||_p``."""
    return _pnorm(_check_finite(v), spec.exponent)


def dual_norm(v, spec: NormSpec):
    """``||v||_q`` with q dual to the perturbation exponent of ``spec``."""
    return _pnorm(_check_finite(v), spec.dual_exponent)


def dual_attainment(v, spec: NormSpec) -> np.ndarray:
    """Unit perturbation ``u`` (``||u||_p = 1``) with ``<v, u> = ||v||_q``.

    ``eps * dual_attainment(v)`` is therefore the exact maximiser of
    ``<v, delta>`` over the eps-ball. For ``v = 0`` the first basis vector is
    returned.
    """
    v = _check_finite(v)
    shape = v.shape
    v = v.reshape(-1, shape[-1])
    p = spec.exponent
    a = np.abs(v)
    sgn = np.sign(v)
    if math.isinf(p):
        u = np.where(sgn == 0, 1.0, sgn)
    elif p == 1:
        rows = np.arange(v.shape[0])
        idx = np.argmax(a, axis=-1)
        u = np.zeros_like(v)
        picked = sgn[rows, idx]
        u[rows, idx] = np.where(picked == 0, 1.0, picked)
    else:
        q = spec.dual_exponent
        m = a.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        w = sgn * (a / safe) ** (q - 1)
        u = w / _pnorm(w, p)[:, None] if np.all(m > 0) else w
        zero = m[:, 0] == 0
        if np.any(zero):
            nz = ~zero
            u[nz] = w[nz] / _pnorm(w[nz], p)[:, None]
            u[zero] = 0.0
            u[zero, 0] = 1.0
    return u.reshape(shape)


@dataclass(frozen=True)
class Covariance:
    """Symmetric positive semidefinite covariance matrix."""

    matrix: np.ndarray
    _sqrt: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("covariance has non-finite entries")
        if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("covariance is not symmetric")
        m = 0.5 * (m + m.T)
        evals, evecs = np.linalg.eigh(m)
        if evals.size and evals.min() < -EIGEN_TOL:
            raise ValueError(f"covariance is not PSD (min eigenvalue {evals.min():.3e})")
        root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
        m.setflags(write=False)
        root.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_sqrt", root)

    @classmethod
    def identity(cls, d: int) -> "Covariance":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def sqrt(self) -> np.ndarray:
        """Symmetric square root, ``sqrt @ sqrt == matrix``."""
        return self._sqrt

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def sigma_norm(theta, cov: Covariance):
    """``||theta||_Sigma = sqrt(theta' Sigma theta)``."""
    theta = _check_finite(theta)
    if theta.shape[-1] != cov.dim:
        raise ValueError(f"dimension mismatch: theta has {theta.shape[-1]}, Sigma has {cov.dim}")
    quad = np.einsum("...i,ij,...j->...", theta, cov.matrix, theta)
    scale = np.einsum("...i,...i->...", np.abs(theta), np.abs(theta)) * max(1.0, np.abs(cov.matrix).max())
    if np.any(quad < -1e-10 * np.maximum(scale, 1.0)):
        raise ArithmeticError("negative quadratic form: covariance invariant violated")
    return np.sqrt(np.clip(quad, 0.0, None))


def dual_ratio(theta, cov: Covariance, spec: NormSpec):
    """``||theta||_Sigma^2 / ||theta||_*^2`` (the quantity lambda* maximises)."""
    return sigma_norm(theta, cov) ** 2 / dual_norm(theta, spec) ** 2


def _candidate_directions(d: int, q: float) -> np.ndarray:
    cands = [np.eye(d), -np.eye(d), np.ones((1, d))]
    # cube vertices hold the maximiser of a convex form on the l_inf ball
    if math.isinf(q) and d <= 12:
        grid = np.array(np.meshgrid(*([[-1.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T
        cands.append(grid)
    return np.vstack(cands)


def lambda_star(
    cov: Covariance,
    spec: NormSpec,
    method: str = "closed-form",
    *,
    restarts: int = 32,
    steps: int = 500,
    seed: int = 0,
) -> float:
    """``sup_{theta != 0} ||theta||_Sigma^2 / ||theta||_*^2``.

    ``method="closed-form"`` is exact for l2 perturbations (largest eigenvalue
    of Sigma) and falls through to the search otherwise. The search value is a
    lower bound of the supremum: the best ratio found by a generalised power
    iteration on the unit dual sphere, together with the signed basis vectors,
    the all-ones direction and (for l1 perturbations, small d) the cube
    vertices.
    """
    if method not in {"closed-form", "search"}:
        raise ValueError(f"unknown lambda* method {method!r}")
    if method == "closed-form" and spec.exponent == 2:
        return float(max(cov.eigenvalues().max(), 0.0))

    d = cov.dim
    q = spec.dual_exponent
    S = cov.matrix

    def ratio(t):
        num = np.einsum("...i,ij,...j->...", t, S, t)
        return num / _pnorm(t, q) ** 2

    best = float(np.max(ratio(_candidate_directions(d, q))))

    # theta -> argmax_{||t||_q <= 1} <Sigma theta, t> never decreases the
    # convex form; for q = 2 it is power iteration
    ball = NormSpec(q)
    rng = np.random.default_rng(np.random.SeedSequence([seed, d]))
    theta = rng.standard_normal((restarts, d))
    for _ in range(steps):
        theta = dual_attainment(theta @ S, ball)
    best = max(best, float(np.max(ratio(theta))))
    return max(best, 0.0)


def lambda_star_all_ones(cov: Covariance, spec: NormSpec) -> float:
    """The lambda* ratio evaluated at the all-ones direction.

    For ``Sigma = I`` with l_inf perturbations this is ``1/d``.
    """
    return float(dual_ratio(np.ones(cov.dim), cov, spec))
