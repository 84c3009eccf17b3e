"""Batteries and brute-force oracles behind the CLI audit commands.

The brute-force routines evaluate predictors directly on explicit
perturbation candidates; they share no code with the closed forms they check
beyond computing an inner product.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distributions import DataSpec, classification_spec, regression_spec, sample_x_batch
from .geometry import core_membership, in_core_mask
from .losses import LossKind, check_pair_conditions, eval_loss, unique_argmax
from .models import LinearClassifier, RidgeModel, adversarial_ls_gradient, worst_case_deviation, worst_case_ls_loss
from .numerics import Covariance, NormSpec, dual_attainment, dual_norm, lambda_star, norm
from .risk import per_sample_terms
from .streams import Purpose, map_chunks, normals, uniforms

__all__ = [
    "certificate_battery",
    "zero_one_exhaustive",
    "pinsker_battery",
    "make_cov",
    "ridge_battery",
    "classification_battery",
    "perturbation_candidates",
    "brute_force_ridge",
    "closed_form_oracle",
    "core_probe",
    "core_equality",
    "danskin_check",
    "lambda_star_check",
]


# -- certificate pairs -------------------------------------------------------


def _dirichlet(u: np.ndarray) -> np.ndarray:
    e = -np.log(u)
    return e / e.sum(axis=-1, keepdims=True)


def _kl_quadruples(seed: int, idx, k: int):
    u = uniforms(seed, Purpose.AUX + 16 * k, idx, 4 * k).reshape(len(idx), 4, k)
    p1, p2 = _dirichlet(u[:, 0]), _dirichlet(u[:, 1])
    eye = np.eye(k)
    onehot = lambda w: eye[np.minimum((w[:, 0] * k).astype(int), k - 1)]  # noqa: E731
    # even samples get one-hot targets, odd ones interior simplex targets
    odd = (np.asarray(idx) % 2 == 1)[:, None]
    v1 = np.where(odd, _dirichlet(u[:, 2]), onehot(u[:, 2]))
    v2 = np.where(odd, _dirichlet(u[:, 3]), onehot(u[:, 3]))
    return p1, v1, p2, v2


def _zero_one_quadruples(seed: int, idx, k: int):
    z = normals(seed, Purpose.AUX + 16 * k, idx, 4 * k).reshape(len(idx), 4, k)
    # odd samples are snapped to {-1, 0, 1} so ties and exact equalities occur
    odd = (np.asarray(idx) % 2 == 1)[:, None, None]
    z = np.where(odd, np.clip(np.round(z), -1, 1), z)
    return z[:, 0], z[:, 1], z[:, 2], z[:, 3]


@dataclass(frozen=True)
class CertificateSummary:
    kind: str
    k: int
    n: int
    min_slack1: float
    min_slack2: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def certificate_battery(kind, n: int, seed: int, *, k: int = 3, threads=None) -> CertificateSummary:
    """Random quadruples through both pairwise conditions."""
    kind = LossKind(kind)

    def chunk(idx):
        if kind is LossKind.LS:
            q = normals(seed, Purpose.AUX, idx, 4)
            quad = (q[:, 0], q[:, 1], q[:, 2], q[:, 3])
        elif kind is LossKind.KL:
            quad = _kl_quadruples(seed, idx, k)
        else:
            quad = _zero_one_quadruples(seed, idx, k)
        chk = check_pair_conditions(kind, *quad)
        bad = ~(chk.cond1 & chk.cond2)
        return np.stack([chk.slack1, chk.slack2, bad.astype(float)], axis=-1)

    table = map_chunks(chunk, n, threads)
    return CertificateSummary(
        kind.value,
        1 if kind is LossKind.LS else k,
        n,
        float(table[:, 0].min()),
        float(table[:, 1].min()),
        int(table[:, 2].sum()),
    )


def _pattern_representatives(k: int) -> np.ndarray:
    """Score vectors covering every argmax pattern, twice each.

    Each unique-argmax class and each tie set appears with two distinct
    vectors so that both ``u == v`` and ``u != v`` occur within a pattern.
    """
    reps = []
    for size in range(1, k + 1):
        for top in itertools.combinations(range(k), size):
            for level in (1.0, 2.0):
                v = np.zeros(k)
                v[list(top)] = level
                reps.append(v)
    return np.array(reps)


def zero_one_exhaustive(k: int) -> CertificateSummary:
    """Both conditions over all 4-tuples of pattern representatives."""
    reps = _pattern_representatives(k)
    m = len(reps)
    ii = np.array(list(itertools.product(range(m), repeat=4)))
    chk = check_pair_conditions(LossKind.ZERO_ONE, reps[ii[:, 0]], reps[ii[:, 1]], reps[ii[:, 2]], reps[ii[:, 3]])
    bad = ~(chk.cond1 & chk.cond2)
    return CertificateSummary("ZERO_ONE", k, len(ii), float(chk.slack1.min()), float(chk.slack2.min()), int(bad.sum()))


def pinsker_battery(n: int, seed: int, *, k: int = 3, threads=None) -> tuple[float, int]:
    """Minimum of ``KL(v || u) - ||u - v||_1^2 / 2`` and the violation count."""

    def chunk(idx):
        w = uniforms(seed, Purpose.AUX + 7, idx, 2 * k).reshape(len(idx), 2, k)
        u, v = _dirichlet(w[:, 0]), _dirichlet(w[:, 1])
        return eval_loss(LossKind.KL, u, v) - np.abs(u - v).sum(axis=-1) ** 2 / 2

    gap = map_chunks(chunk, n, threads)
    return float(gap.min()), int((gap < -1e-12).sum())


# -- trade-off batteries -----------------------------------------------------


def make_cov(d: int, kind: str = "toeplitz", rho: float = 0.3) -> Covariance:
    if kind == "identity":
        return Covariance.identity(d)
    if kind == "toeplitz":
        i = np.arange(d)
        return Covariance(rho ** np.abs(i[:, None] - i[None, :]))
    raise ValueError(f"unknown covariance kind {kind!r}")


def _ridge_params(seed: int, d: int, shift: float):
    theta_star = normals(seed, Purpose.AUX, [1000 + d], d)[0] / math.sqrt(d)
    theta = theta_star + shift * normals(seed, Purpose.AUX, [2000 + d], d)[0] / math.sqrt(d)
    return theta_star, theta


def ridge_battery(
    *, degrees, dims, families, eps_grid, norms, sigma2, noise, cov_kind, rho, shift, seed
):
    """Yield ``(label dict, model, spec, eps, NormSpec)`` for every ridge configuration."""
    for d in dims:
        theta_star, theta = _ridge_params(seed, d, shift)
        cov = make_cov(d, cov_kind, rho)
        for p, fam in itertools.product(degrees, families):
            spec = regression_spec(theta_star, sigma2, degree=p, cov=cov, x_family=fam, noise=noise)
            model = RidgeModel(theta, p)
            for nrm, eps in itertools.product(norms, eps_grid):
                ns = NormSpec(nrm)
                yield (
                    dict(task="regression", loss="LS", degree=p, dim=d, family=fam, norm=ns.label, eps=float(eps), k=1),
                    model,
                    spec,
                    float(eps),
                    ns,
                )


def _classifier(seed: int, k: int, d: int, scale: float, tag: int) -> LinearClassifier:
    W = scale * normals(seed, Purpose.AUX, [3000 + 97 * k + 13 * d + tag], k * d)[0].reshape(k, d)
    b = 0.2 * normals(seed, Purpose.AUX, [4000 + 97 * k + 13 * d + tag], k)[0]
    return LinearClassifier(W, b)


def classification_battery(*, ks, dims, families, eps_grid, norms, losses, scale, seed, cov_kind="identity", rho=0.3):
    """Yield ``(label dict, classifier, spec, eps, NormSpec, loss)``.

    Labels come from a reference classifier; the evaluated classifier is a
    perturbed copy of it, so its predictions are informative but imperfect.
    """
    for k, d in itertools.product(ks, dims):
        ref = _classifier(seed, k, d, scale, 0)
        noise = _classifier(seed, k, d, 0.5 * scale, 1)
        model = LinearClassifier(ref.W + noise.W, ref.b + noise.b)
        cov = make_cov(d, cov_kind, rho)
        for fam in families:
            spec = classification_spec(ref, cov=cov, x_family=fam)
            for loss, nrm, eps in itertools.product(losses, norms, eps_grid):
                ns = NormSpec(nrm)
                label = dict(task="classification", loss=LossKind(loss).value, degree=0, dim=d, family=fam,
                             norm=ns.label, eps=float(eps), k=k)
                yield label, model, spec, float(eps), ns, LossKind(loss)


# -- brute-force oracles -----------------------------------------------------


def perturbation_candidates(theta, x, eps: float, spec: NormSpec, *, seed: int = 0, directions: int = 10_000):
    """Explicit perturbations of norm <= eps used by the brute-force search.

    l_inf: the 11^d grid on [-eps, eps]^d (corners included). l1: the 2d
    vertices plus random points of the sphere. Other norms: random points of
    the sphere. Every case adds the attaining pair ``+-eps u*`` and, when the
    score interval contains 0, the point moving the score exactly to 0.
    """
    theta = np.asarray(theta, dtype=np.float64)
    d = theta.size
    p = spec.exponent
    parts = [np.zeros((1, d))]
    if math.isinf(p):
        levels = np.linspace(-eps, eps, 11)
        parts.append(np.array(list(itertools.product(levels, repeat=d))))
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed, d]))
        v = rng.standard_normal((directions, d))
        nv = norm(v, spec)[:, None]
        parts.append(eps * v / np.where(nv > 0, nv, 1.0))
        if p == 1:
            parts.append(eps * np.vstack([np.eye(d), -np.eye(d)]))
    u = dual_attainment(theta, spec)
    parts.append(np.vstack([eps * u, -eps * u]))
    s = float(np.dot(theta, x))
    r = eps * float(dual_norm(theta, spec))
    if r > 0 and abs(s) <= r:
        parts.append((-(s / r) * eps * u)[None, :])
    return np.vstack(parts)


def brute_force_ridge(m: RidgeModel, x, y, eps: float, spec: NormSpec, **kw):
    """``(max deviation, max LS loss)`` over ``perturbation_candidates``."""
    x = np.asarray(x, dtype=np.float64)
    deltas = perturbation_candidates(m.theta, x, eps, spec, **kw)
    z = (x[None, :] + deltas) @ m.theta
    f = z**m.degree
    f0 = float(np.dot(m.theta, x)) ** m.degree
    return float(np.max(np.abs(f - f0))), float(np.max((f - y) ** 2 / 2))


@dataclass(frozen=True)
class OracleSummary:
    name: str
    instances: int
    max_rel_err: float
    exceed: int
    mismatches: int

    @property
    def passed(self) -> bool:
        return self.exceed == 0 and self.mismatches == 0


def closed_form_oracle(instances: int, seed: int, *, max_dim: int = 5, rel_tol: float = 1e-9, directions: int = 10_000):
    """Closed-form worst-case deviation and LS loss against brute force.

    Returns one ``OracleSummary`` per quantity. ``exceed`` counts instances
    where brute force beats the closed form; ``mismatches`` counts relative
    gaps above ``rel_tol``.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 31337]))
    stats = {"worst_case_deviation": [0.0, 0, 0], "worst_case_ls_loss": [0.0, 0, 0]}
    for i in range(instances):
        d = int(rng.integers(1, max_dim + 1))
        p = int(rng.choice([1, 2, 3]))
        eps = float(rng.choice([0.1, 0.5, 1.0]))
        spec = NormSpec(rng.choice([1.0, 2.0, math.inf]))
        m = RidgeModel(rng.standard_normal(d), p)
        x = rng.standard_normal(d)
        y = float(rng.standard_normal() * 2)
        bf_dev, bf_loss = brute_force_ridge(m, x, y, eps, spec, seed=seed + i, directions=directions)
        cf_dev = float(worst_case_deviation(m, x, eps, spec))
        cf_loss = float(worst_case_ls_loss(m, x, y, eps, spec).value)
        for key, cf, bf in (("worst_case_deviation", cf_dev, bf_dev), ("worst_case_ls_loss", cf_loss, bf_loss)):
            scale = max(abs(cf), 1e-300)
            rel = abs(cf - bf) / scale
            st = stats[key]
            st[0] = max(st[0], rel)
            st[1] += int(bf > cf * (1 + 1e-12) + 1e-300)
            st[2] += int(rel > rel_tol)
    return [OracleSummary(k, instances, v[0], v[1], v[2]) for k, v in stats.items()]


def core_probe(c: LinearClassifier, X, eps: float, spec: NormSpec, probes: int, seed: int) -> dict:
    """Random perturbations of norm <= eps around certified core points.

    A flip (argmax no longer the certified class) at a certified point would
    falsify the certificate. Points outside every core are counted as
    ``found`` when a probe exhibits a flip; brute force can only miss those.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d = X.shape[1]
    flips_in_core = 0
    certified = 0
    outside = 0
    found = 0
    for i, x in enumerate(X):
        cert = core_membership(c, x, eps, spec)
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        v = rng.standard_normal((probes, d))
        radius = eps * rng.random((probes, 1)) ** (1.0 / d)
        v = radius * v / np.maximum(norm(v, spec)[:, None], 1e-300)
        if cert is not None:
            # the attaining direction for the tightest pair sits on the boundary
            j = [t for t in range(c.n_classes) if t != cert.cls]
            tight = j[int(np.argmin(cert.margins - cert.thresholds))]
            v = np.vstack([v, -eps * dual_attainment(c.W[cert.cls] - c.W[tight], spec)])
        top = unique_argmax(c.scores(x[None, :] + v))
        if cert is not None and cert.in_core:
            certified += 1
            flips_in_core += int(np.any(top != cert.cls))
        else:
            outside += 1
            ref = -2 if cert is None else cert.cls
            found += int(cert is None or np.any(top != ref))
    return dict(certified=certified, flips_in_core=flips_in_core, outside=outside, found=found)


def core_equality(c: LinearClassifier, spec: DataSpec, eps: float, norm_spec: NormSpec, n: int, seed: int, *, threads=None):
    """Samples outside every core, counted by the 0/1 smoothness term and by core membership.

    Both counts use the same draws and must be equal.
    """
    vals, _ = per_sample_terms(
        c, LossKind.ZERO_ONE, spec, n, seed, eps=eps, norm_spec=norm_spec, terms=("smoothness_b",), threads=threads
    )
    X = map_chunks(lambda idx: sample_x_batch(spec, seed, idx), n, threads)
    inside = in_core_mask(c, X, eps, norm_spec)
    return int(np.sum(vals["smoothness_b"] == 1)), n - int(inside.sum())


def danskin_check(instances: int, seed: int, *, h: float = 1e-6, rel_tol: float = 1e-4, max_dim: int = 5):
    """Danskin gradients against central differences of the worst-case LS loss.

    Instances near a tie of the two endpoint losses, or where the dual norm
    is not differentiable at theta, are redrawn. Returns
    ``(max relative error, failures, accepted instances)``.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4242]))
    worst = 0.0
    failures = 0
    accepted = 0
    while accepted < instances:
        d = int(rng.integers(1, max_dim + 1))
        p = int(rng.choice([1, 2, 3]))
        spec = NormSpec(rng.choice([1.0, 2.0, 3.0, math.inf]))
        eps = float(rng.choice([0.0, 0.1, 0.5, 1.0]))
        theta = rng.standard_normal(d)
        x = rng.standard_normal(d)
        y = float(2 * rng.standard_normal())
        a = np.abs(theta)
        if a.min() < 1e-2:
            continue
        if d > 1 and np.sort(a)[-1] - np.sort(a)[-2] < 1e-2:
            continue
        m = RidgeModel(theta, p)
        s = float(x @ theta)
        r = eps * float(dual_norm(theta, spec))
        lo, hi = (s - r) ** p, (s + r) ** p
        cands = sorted({(lo - y) ** 2, (hi - y) ** 2} | ({y * y} if p % 2 == 0 and s - r < 0 < s + r else set()))
        if len(cands) > 1 and cands[-1] - cands[-2] < 1e-6:
            continue
        if p % 2 == 0 and min(abs(s - r), abs(s + r)) < 1e-3:
            continue
        g = adversarial_ls_gradient(m, x, y, eps, spec)
        fd = np.empty(d)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fp = float(worst_case_ls_loss(RidgeModel(theta + e, p), x, y, eps, spec).value)
            fm = float(worst_case_ls_loss(RidgeModel(theta - e, p), x, y, eps, spec).value)
            fd[j] = (fp - fm) / (2 * h)
        rel = float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-8))
        worst = max(worst, rel)
        failures += int(rel > rel_tol)
        accepted += 1
    return worst, failures, accepted


def lambda_star_check(dims=(1, 2, 3, 4, 5), trials: int = 5, seed: int = 0, rel_tol: float = 1e-6):
    """Closed-form l2 lambda* against the search branch on random covariances."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    worst = 0.0
    for d in dims:
        for _ in range(trials):
            A = rng.standard_normal((d, d))
            cov = Covariance(A @ A.T / d)
            cf = lambda_star(cov, NormSpec(2), "closed-form")
            se = lambda_star(cov, NormSpec(2), "search")
            worst = max(worst, abs(cf - se) / max(cf, 1e-300))
    return worst, worst <= rel_tol
