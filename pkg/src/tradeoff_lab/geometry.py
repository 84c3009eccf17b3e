"""eps-cores of the decision regions of an affine classifier.

The region of class ``i`` is ``{x : s_i(x) > s_j(x) for all j != i}``, an open
polyhedron. A perturbation ``delta`` shifts the margin against ``j`` by
``<w_i - w_j, delta>``, whose minimum over the eps-ball is
``-eps ||w_i - w_j||_*``. Hence ``x`` lies in the eps-core of its region iff
every margin exceeds ``eps ||w_i - w_j||_*`` (strictly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import DataSpec
from .losses import NO_UNIQUE_MAX, LossKind
from .models import LinearClassifier, argmax_region
from .numerics import NormSpec, dual_norm
from .risk import BoundReport, theorem1_report

__all__ = [
    "CoreCertificate",
    "core_membership",
    "in_core_mask",
    "adv01_loss_exact",
    "cor3_report",
]


@dataclass(frozen=True)
class CoreCertificate:
    cls: int
    margins: np.ndarray
    thresholds: np.ndarray
    in_core: bool


def core_membership(c: LinearClassifier, x, eps: float, spec: NormSpec) -> CoreCertificate | None:
    """Certificate for the region containing ``x``; ``None`` on an argmax tie."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    i = argmax_region(c, x)
    if i == NO_UNIQUE_MAX:
        return None
    others = [j for j in range(c.n_classes) if j != i]
    z = c.scores(x)
    margins = z[i] - z[others]
    thresholds = eps * dual_norm(c.W[i] - c.W[others], spec)
    return CoreCertificate(i, margins, thresholds, bool(np.all(margins > thresholds)))


def in_core_mask(c: LinearClassifier, x, eps: float, spec: NormSpec) -> np.ndarray:
    """Vectorised membership of the rows of ``x`` in the union of eps-cores."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = c.scores(x)
    top = argmax_region(c, x)
    top = np.atleast_1d(top)
    safe = np.where(top == NO_UNIQUE_MAX, 0, top)
    thr = eps * dual_norm(c.W[:, None, :] - c.W[None, :, :], spec)
    margins = z[np.arange(len(z)), safe][:, None] - z
    ok = margins > thr[safe]
    ok[np.arange(len(z)), safe] = True
    return (top != NO_UNIQUE_MAX) & ok.all(axis=-1)


def adv01_loss_exact(c: LinearClassifier, x, eps: float, spec: NormSpec) -> int:
    """``sup_delta l01(f(x), f(x + delta))``: 0 inside a core, else 1."""
    cert = core_membership(c, x, eps, spec)
    return 0 if cert is not None and cert.in_core else 1


def cor3_report(
    c: LinearClassifier, spec: DataSpec, eps: float, norm_spec: NormSpec, n: int, seed: int, *, threads=None
) -> BoundReport:
    """``R + R_eps >= max(P(X outside every core), E l01(Y, Y'))`` for 0/1 loss.

    The label term uses ``l01(Y, Y') = ||Y - Y'||_1 / 2`` for one-hot labels.
    """
    if spec.task != "classification":
        raise ValueError("the 0/1 bound needs a classification spec")
    return theorem1_report(c, LossKind.ZERO_ONE, spec, eps, norm_spec, n, seed, threads=threads)
