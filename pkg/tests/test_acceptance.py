"""Acceptance criteria 1-9, each printing one PASS/FAIL line."""

import csv
import math
import time

import numpy as np
import pytest
from scipy import optimize

from tradeoff_lab import audits, cli
from tradeoff_lab.distributions import (
    c_p_constant,
    classification_spec,
    regression_spec,
    sample_labels_batch,
    sample_x_batch,
    snr_p,
)
from tradeoff_lab.losses import LossKind
from tradeoff_lab.models import LinearClassifier, RidgeModel
from tradeoff_lab.numerics import Covariance, NormSpec, sigma_norm
from tradeoff_lab.ridge_analysis import (
    RidgeBoundInputs,
    binomial_chain_audit,
    epsilon_threshold,
    l_eps_lower_bound,
    tradeoff_bound,
)
from tradeoff_lab.risk import label_spread, local_smoothness, theorem1_report
from tradeoff_lab.streams import Estimate, Purpose
from tradeoff_lab.training import TrainConfig, adversarial_fit, erm_fit, training_set

L2, LINF = NormSpec(2), NormSpec("inf")


@pytest.fixture
def announce(capsys):
    def _announce(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return _announce


def test_criterion_1_certificate_conditions(announce):
    start = time.perf_counter()
    random = [audits.certificate_battery(k, 1_000_000, 2024, k=3) for k in LossKind]
    exhaustive = [audits.zero_one_exhaustive(k) for k in (2, 3)]
    elapsed = time.perf_counter() - start
    slack = min(min(s.min_slack1, s.min_slack2) for s in random + exhaustive)
    ok = all(s.passed for s in random + exhaustive) and slack >= -1e-12 and elapsed < 60
    announce(1, ok, f"3x10^6 random quadruples + exhaustive k=2,3; min slack {slack:.3g}; {elapsed:.1f}s")


def test_criterion_2_theorem1_audit(announce, tmp_path):
    start = time.perf_counter()
    code = cli.main(["audit-theorem1", "--seed", "7", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    with open(tmp_path / "audit-theorem1.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    exact = [r for r in rows if r["exact"] == "1"]
    passed = sum(r["verdict"] == "pass" for r in exact)
    ridge = {(r["degree"], r["dim"], r["family"], r["eps"]) for r in rows if r["task"] == "regression"}
    ok = code == 0 and len(rows) >= 50 and passed == len(exact) and len(ridge) == 3 * 2 * 3 * 4 and elapsed < 300
    announce(2, ok, f"{passed}/{len(exact)} exact-inner-sup rows pass of {len(rows)} rows (n=10^5); {elapsed:.1f}s")


def test_criterion_3_closed_form_exactness(announce):
    start = time.perf_counter()
    out = audits.closed_form_oracle(1000, 3, max_dim=5, rel_tol=1e-9)
    elapsed = time.perf_counter() - start
    ok = all(s.passed for s in out) and elapsed < 120
    detail = "; ".join(f"{s.name} max rel {s.max_rel_err:.2g}, brute>closed {s.exceed}" for s in out)
    announce(3, ok, f"{detail}; {elapsed:.1f}s")


def test_criterion_4_constants(announce):
    n, sigma2 = 100_000, 1.5
    spec = regression_spec([0.8, -0.4], sigma2, degree=2, x_family="uniform-cube")
    spread = label_spread(LossKind.LS, spec, n, 41)
    label_ok = abs(spread.value - sigma2 / 3) <= 4 * spread.std_error

    idx = np.arange(n)
    X = sample_x_batch(spec, 42, idx)
    diff2 = (sample_labels_batch(spec, 42, idx, X, Purpose.LABEL)
             - sample_labels_batch(spec, 42, idx, X, Purpose.LABEL_PRIME)) ** 2
    e = Estimate.from_samples(diff2, 42)
    pair_ok = abs(e.value - 2 * sigma2) <= 4 * e.std_error

    grid = [RidgeBoundInputs(a, q, p, eps) for a in (0.0, 0.5, 2.0) for q in (0.3, 1.0) for p in (1, 2, 3)
            for eps in (0.0, 0.1, 1.0)]
    sixth_ok = all(math.isclose(tradeoff_bound(i), l_eps_lower_bound(i) / 6, rel_tol=1e-14, abs_tol=0) for i in grid)
    m = RidgeModel([0.5, 0.5], 2)
    rep = theorem1_report(m, LossKind.LS, spec, 0.3, L2, 20_000, 0)
    L = local_smoothness(m, spec, 0.3, L2, 20_000, 0)
    sixth_ok = sixth_ok and rep.smoothness_term.value == L.value / 6

    g = regression_spec([1.0, 0.0], 1.0)
    c1, c2 = c_p_constant(g, 1).value, c_p_constant(g, 2).value
    const_ok = c1 == 1.0 and abs(c2 - 3**0.25) <= 1e-12
    ok = label_ok and pair_ok and sixth_ok and const_ok
    announce(4, ok, f"label term {spread.value:.4f} vs {sigma2 / 3:.4f}; E(Y-Y')^2 {e.value:.4f} vs {2 * sigma2}; "
                    f"1/6 identity {sixth_ok}; C_1={c1}, C_2-3^(1/4)={c2 - 3**0.25:.1e}")


def test_criterion_5_binomial_chain(announce):
    spec_cov = Covariance(np.array([[1.0, 0.4], [0.4, 2.0]]))
    audits_run = []
    for p in (2, 3):
        spec = regression_spec([1.0, 0.0], 1.0, degree=p, cov=spec_cov)
        for theta in ([0.6, -0.8], [1.5, 0.2]):
            for eps, ns in ((0.1, L2), (0.5, LINF), (1.0, L2)):
                inp = RidgeBoundInputs.from_model(RidgeModel(theta, p), spec.cov, ns, eps)
                audits_run.append(binomial_chain_audit(inp, spec, 100_000, 5))
    links = [ln for a in audits_run for ln in a.links]
    ok = all(ln.ok for ln in links)
    announce(5, ok, f"{sum(ln.ok for ln in links)}/{len(links)} adjacent links hold within 3 SE (p=2,3, gaussian, 10^5)")


def test_criterion_6_core_geometry(announce):
    rng = np.random.default_rng(6)
    equal, total = 0, 0
    for k in (2, 3, 4):
        ref = LinearClassifier(1.5 * rng.standard_normal((k, 2)), 0.2 * rng.standard_normal(k))
        spec = classification_spec(ref)
        for ns in (NormSpec(1), L2, LINF):
            for eps in (0.0, 0.1, 0.5):
                by_term, by_core = audits.core_equality(ref, spec, eps, ns, 100_000, 11)
                equal += by_term == by_core
                total += 1
    c = LinearClassifier(1.5 * rng.standard_normal((3, 2)))
    X = sample_x_batch(classification_spec(c), 3, np.arange(1000))
    start = time.perf_counter()
    probe = audits.core_probe(c, X, 0.3, L2, 10_000, 12)
    elapsed = time.perf_counter() - start
    ok = equal == total and probe["flips_in_core"] == 0 and probe["certified"] > 0
    announce(6, ok, f"smoothness count == outside-core count in {equal}/{total} configs; "
                    f"{probe['flips_in_core']} flips over 10^4 probes at {probe['certified']} certified points "
                    f"({elapsed:.1f}s)")


def test_criterion_7_threshold(announce):
    worst = 0.0
    for theta, s2, lam in (([1.0, 2.0], 0.25, 1.0), ([0.3, -0.1, 2.0], 4.0, 0.37), ([5.0], 1e-3, 2.5)):
        d = len(theta)
        spec = regression_spec(theta, s2, cov=Covariance(np.diag(np.arange(1.0, d + 1))))
        got = epsilon_threshold(1, c_p_constant(spec, 1).value, lam, snr_p(spec).value).value
        want = math.sqrt(lam) * math.sqrt(s2) / float(sigma_norm(spec.theta_star, spec.cov))
        worst = max(worst, abs(got - want) / want)
    worked = epsilon_threshold(2, 3**0.25, 1.0, 81.0).value
    arithmetic = min((math.sqrt(3) / 2) / 9, 3**0.25 / 3)
    ok = worst <= 1e-12 and abs(worked - arithmetic) <= 1e-6 and abs(worked - 0.09623) <= 5e-6
    announce(7, ok, f"p=1 max rel err {worst:.1e}; p=2 worked value {worked:.6f}")


def _population_minimiser(eps, sigma):
    def objective(t):
        v = (t - 1.0) ** 2 + sigma**2
        c = eps * abs(t)
        return 0.5 * (v + 2 * c * math.sqrt(2 * v / math.pi) + c * c)

    return optimize.minimize_scalar(objective, bounds=(-3, 3), method="bounded", options={"xatol": 1e-10}).x


def test_criterion_8_training(announce):
    bitwise = True
    for p in (1, 2, 3):
        spec = regression_spec([0.7, -0.3], 0.2, degree=p)
        X, y = training_set(spec, 128, p)
        cfg = TrainConfig(iterations=200, init="random-gaussian", seed=p)
        a, b = erm_fit(X, y, p, cfg), adversarial_fit(X, y, p, 0.0, L2, cfg)
        bitwise &= a.theta.tobytes() == b.theta.tobytes() and a.trace == b.trace

    rel, fails, count = audits.danskin_check(1000, 8, h=1e-6, rel_tol=1e-4)

    eps, sigma = 0.3, 0.5
    oracle = _population_minimiser(eps, sigma)
    spec = regression_spec([1.0], sigma**2)
    agree = 0
    for seed in range(10):
        X, y = training_set(spec, 1000, seed)
        cfg = TrainConfig(step0=0.5, iterations=300, seed=seed)
        t0 = erm_fit(X, y, 1, cfg).theta[0]
        te = adversarial_fit(X, y, 1, eps, L2, cfg).theta[0]
        agree += (abs(te) < abs(t0)) == (abs(oracle) < 1.0)
    ok = bitwise and fails == 0 and count == 1000 and agree >= 9
    announce(8, ok, f"eps=0 bitwise {bitwise}; Danskin max rel {rel:.1e} on {count}; "
                    f"shrinkage agrees with oracle (theta={oracle:.4f}) in {agree}/10 seeds")


REDUCED = {
    "verify-certificates": ["n=50000", "pinsker_n=20000"],
    "audit-theorem1": ["n=20000"],
    "audit-cor3": ["n=20000", "probe_points=20", "probes=500"],
    "ridge-analyze": ["n=20000", "c_p_n=20000"],
    "train": ["eval_n=20000"],
    "frontier": ["eval_n=20000", "train.iterations=200"],
    "oracle": ["instances=100", "directions=2000", "danskin_instances=200"],
}


def test_criterion_9_determinism(announce, tmp_path):
    identical = []
    for command, sets in REDUCED.items():
        outputs = []
        for threads in ("1", "3"):
            out = tmp_path / f"{command}-{threads}"
            args = [command, "--seed", "17", "--threads", threads, "--out", str(out)]
            for s in sets:
                args += ["--set", s]
            cli.main(args)
            outputs.append((out / f"{command}.csv").read_bytes() + (out / f"{command}_plot.csv").read_bytes())
        identical.append(outputs[0] == outputs[1])
    ok = all(identical)
    announce(9, ok, f"{sum(identical)}/{len(identical)} commands byte-identical with --threads 1 vs 3")
