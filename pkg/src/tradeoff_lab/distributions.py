"""Data-generating processes and the constants C_p and SNR_p.

Regression draws ``Y = <theta*, X>^p + Z``; classification draws a one-hot
``Y`` from the softmax of a reference classifier. ``X`` is zero mean with
covariance ``Sigma`` in all three families: standard coordinates
(gaussian, Rademacher, or uniform on ``[-sqrt 3, sqrt 3]``) multiplied by the
symmetric square root of ``Sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import LinearClassifier, predict_softmax
from .numerics import Covariance, sigma_norm
from .streams import Estimate, Purpose, SampleStream, map_chunks, normals, uniforms

__all__ = [
    "DataSpec",
    "regression_spec",
    "classification_spec",
    "sample_x",
    "sample_label",
    "sample_x_batch",
    "sample_labels_batch",
    "double_factorial",
    "c_p_constant",
    "snr_p",
    "X_FAMILIES",
]

X_FAMILIES = ("gaussian", "rademacher", "uniform-cube")
NOISE_FAMILIES = ("gaussian", "uniform")
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class DataSpec:
    """Distribution of ``(X, Y)``."""

    task: str
    cov: Covariance
    x_family: str = "gaussian"
    theta_star: np.ndarray | None = None
    degree: int = 1
    noise: str = "gaussian"
    sigma2: float = 0.0
    classifier: LinearClassifier | None = None

    def __post_init__(self):
        if self.x_family not in X_FAMILIES:
            raise ValueError(f"unknown x family {self.x_family!r}; choose from {X_FAMILIES}")
        if self.task == "regression":
            if self.theta_star is None:
                raise ValueError("regression needs theta_star")
            ts = np.array(self.theta_star, dtype=np.float64).reshape(-1)
            if ts.size != self.cov.dim:
                raise ValueError("theta_star dimension does not match Sigma")
            ts.setflags(write=False)
            object.__setattr__(self, "theta_star", ts)
            if self.noise not in NOISE_FAMILIES:
                raise ValueError(f"unknown noise family {self.noise!r}")
            if not self.sigma2 >= 0:
                raise ValueError("sigma2 must be nonnegative")
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("degree must be a positive integer")
        elif self.task == "classification":
            if self.classifier is None:
                raise ValueError("classification needs a reference classifier")
            if self.classifier.dim != self.cov.dim:
                raise ValueError("reference classifier dimension does not match Sigma")
        else:
            raise ValueError(f"task must be 'regression' or 'classification', got {self.task!r}")

    @property
    def dim(self) -> int:
        return self.cov.dim

    @property
    def n_classes(self) -> int:
        return self.classifier.n_classes if self.classifier is not None else 1


def regression_spec(theta_star, sigma2, *, degree=1, cov=None, x_family="gaussian", noise="gaussian"):
    theta_star = np.asarray(theta_star, dtype=np.float64).reshape(-1)
    cov = Covariance.identity(theta_star.size) if cov is None else cov
    if not isinstance(cov, Covariance):
        cov = Covariance(cov)
    return DataSpec("regression", cov, x_family, theta_star, degree, noise, float(sigma2))


def classification_spec(classifier: LinearClassifier, *, cov=None, x_family="gaussian"):
    cov = Covariance.identity(classifier.dim) if cov is None else cov
    if not isinstance(cov, Covariance):
        cov = Covariance(cov)
    return DataSpec("classification", cov, x_family, classifier=classifier)


def _standard_coords(family: str, seed: int, index, d: int) -> np.ndarray:
    if family == "gaussian":
        return normals(seed, Purpose.X, index, d)
    u = uniforms(seed, Purpose.X, index, d)
    if family == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    return _SQRT3 * (2.0 * u - 1.0)


def sample_x_batch(spec: DataSpec, seed: int, index) -> np.ndarray:
    """Rows of X for the given sample indices, shape ``(len(index), d)``."""
    z = _standard_coords(spec.x_family, seed, index, spec.dim)
    return z @ spec.cov.sqrt


def _noise(spec: DataSpec, seed: int, purpose: int, index) -> np.ndarray:
    sd = math.sqrt(spec.sigma2)
    if spec.noise == "gaussian":
        return sd * normals(seed, purpose, index, 1)[:, 0]
    return sd * _SQRT3 * (2.0 * uniforms(seed, purpose, index, 1)[:, 0] - 1.0)


def _categorical(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=-1)
    cls = (u[:, None] >= cdf[:, :-1]).sum(axis=-1)
    return np.eye(probs.shape[-1])[cls]


def sample_labels_batch(spec: DataSpec, seed: int, index, x: np.ndarray, purpose=Purpose.LABEL) -> np.ndarray:
    """Labels for rows ``x`` drawn from the label stream ``purpose``.

    Two different label purposes with the same ``x`` give conditionally
    i.i.d. copies ``Y`` and ``Y'``.
    """
    if spec.task == "regression":
        signal = (x @ spec.theta_star) ** spec.degree
        if spec.sigma2 == 0:
            return signal
        return signal + _noise(spec, seed, purpose, index)
    probs = predict_softmax(spec.classifier, x)
    return _categorical(probs, uniforms(seed, purpose, index, 1)[:, 0])


def sample_x(spec: DataSpec, stream: SampleStream) -> np.ndarray:
    return sample_x_batch(spec, stream.seed, [stream.stream_id])[0]


def sample_label(spec: DataSpec, x, stream: SampleStream, purpose=Purpose.LABEL):
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    y = sample_labels_batch(spec, stream.seed, [stream.stream_id], x, purpose)[0]
    return float(y) if np.ndim(y) == 0 else y


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _moment_estimate(values: np.ndarray):
    m = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return m, se


def c_p_constant(spec: DataSpec, p: int, n: int = 100_000, *, seed: int = 0, directions: int = 64, threads=None):
    """Moments-equivalence constant C_p as an ``Estimate``.

    Gaussian X gives the exact value ``((2p-1)!!)^(1/(2p))``. Other families
    take the largest ratio ``(E|<theta,X>|^(2p))^(1/(2p)) / ||theta||_Sigma``
    over random directions, with a delta-method standard error.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if spec.x_family == "gaussian":
        return Estimate(double_factorial(2 * p - 1) ** (1.0 / (2 * p)), 0.0, 0, seed)
    d = spec.dim
    thetas = normals(seed, Purpose.AUX, np.arange(directions), d)
    norms = sigma_norm(thetas, spec.cov)

    def chunk(idx):
        x = sample_x_batch(spec, seed, idx)
        return np.abs(x @ thetas.T) ** (2 * p)

    mom = map_chunks(chunk, n, threads)
    best = (-1.0, 0.0)
    for j in range(directions):
        if norms[j] == 0:
            continue
        m, se = _moment_estimate(mom[:, j])
        ratio = m ** (1.0 / (2 * p)) / norms[j]
        if ratio > best[0]:
            dratio = (1.0 / (2 * p)) * m ** (1.0 / (2 * p) - 1) * se / norms[j] if m > 0 else 0.0
            best = (ratio, dratio)
    return Estimate(best[0], best[1], n, seed)


def snr_p(spec: DataSpec, n: int = 100_000, *, seed: int = 0, threads=None):
    """``E <X, theta*>^(2p) / sigma^2`` as an ``Estimate`` (inf when sigma = 0)."""
    if spec.task != "regression":
        raise ValueError("SNR_p needs a regression spec")
    p = spec.degree
    if spec.sigma2 == 0:
        return Estimate(math.inf, 0.0, 0, seed)
    if spec.x_family == "gaussian":
        nt = float(sigma_norm(spec.theta_star, spec.cov))
        return Estimate(double_factorial(2 * p - 1) * nt ** (2 * p) / spec.sigma2, 0.0, 0, seed)
    vals = map_chunks(lambda idx: (sample_x_batch(spec, seed, idx) @ spec.theta_star) ** (2 * p), n, threads)
    m, se = _moment_estimate(vals)
    return Estimate(m / spec.sigma2, se / spec.sigma2, n, seed)
