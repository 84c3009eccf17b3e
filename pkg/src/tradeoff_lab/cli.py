"""``tradeoff-lab``: run the audits and sweeps from a JSON config.

Every command writes ``<command>.json`` (full report), ``<command>.csv``
(one row per configuration, fixed columns led by ``schema_version``) and
``<command>_plot.csv`` (long format: config hash, eps, metric, value, se)
into ``--out``. Exit status is 0 when every gating audit passes, 2 when an
audit fails or a row could not be computed, and 1 on usage or config errors
(in which case nothing is written).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import audits
from .distributions import c_p_constant, regression_spec, sample_x_batch, snr_p
from .geometry import cor3_report
from .losses import LossKind
from .models import RidgeModel
from .numerics import NormSpec, dual_norm
from .ridge_analysis import (
    RidgeBoundInputs,
    binomial_chain_audit,
    l_eps_lower_bound,
    threshold_readings,
    tradeoff_bound,
)
from .risk import VERDICT_SE, local_smoothness, theorem1_report
from .training import TrainConfig, frontier_sweep

log = logging.getLogger("tradeoff_lab")

SCHEMA_VERSION = 1
FAMILIES = ["gaussian", "rademacher", "uniform-cube"]
EPS_GRID = [0.0, 0.1, 0.5, 1.0]


class ConfigError(Exception):
    pass


# -- configuration -----------------------------------------------------------

_COV = {"kind": "identity", "rho": 0.3}
_TRAIN = {"step0": 0.1, "iterations": 500, "n": 256, "init": "zero", "init_scale": 0.1, "seed": 0}
_RIDGE_DATA = {
    "degree": 1,
    "theta_star": [1.0, -0.5],
    "sigma2": 0.25,
    "cov": _COV,
    "family": "gaussian",
    "noise": "gaussian",
    "norm": "2",
}

DEFAULTS = {
    "verify-certificates": {
        "seed": 0,
        "n": 1_000_000,
        "k": 3,
        "exhaustive_k": [2, 3],
        "pinsker_n": 100_000,
    },
    "audit-theorem1": {
        "seed": 7,
        "n": 100_000,
        "regression": {
            "degrees": [1, 2, 3],
            "dims": [2, 5],
            "families": FAMILIES,
            "eps": EPS_GRID,
            "norms": ["2", "inf"],
            "sigma2": 1.0,
            "noise": "gaussian",
            "cov": {"kind": "toeplitz", "rho": 0.3},
            "theta_shift": 0.3,
        },
        "classification": {
            "ks": [2, 3],
            "dims": [2],
            "families": ["gaussian"],
            "eps": EPS_GRID,
            "norms": ["2", "inf"],
            "losses": ["KL", "ZERO_ONE"],
            "weight_scale": 1.5,
        },
    },
    "audit-cor3": {
        "seed": 0,
        "n": 100_000,
        "ks": [2, 3],
        "dims": [2, 3],
        "families": ["gaussian", "uniform-cube"],
        "eps": EPS_GRID,
        "norms": ["1", "2", "inf"],
        "weight_scale": 1.5,
        "probe_points": 50,
        "probes": 1000,
    },
    "ridge-analyze": {
        "seed": 0,
        "n": 100_000,
        "degree": 2,
        "theta": [0.6, 0.4, 0.2],
        "theta_star": [0.5, 0.5, 0.0],
        "sigma2": 1.0,
        "cov": _COV,
        "family": "gaussian",
        "norm": "inf",
        "eps": [0.0, 0.05, 0.1, 0.2, 0.5],
        "c_p_n": 100_000,
    },
    "train": {"seed": 0, **_RIDGE_DATA, "eps": 0.1, "eval_n": 100_000, "train": _TRAIN},
    "frontier": {"seed": 0, **_RIDGE_DATA, "eps": [0.0, 0.1, 0.2, 0.5, 1.0], "eval_n": 100_000, "train": _TRAIN},
    "oracle": {
        "seed": 0,
        "instances": 1000,
        "max_dim": 5,
        "directions": 10_000,
        "danskin_instances": 1000,
        "lambda_dims": [1, 2, 3, 4, 5],
        "lambda_trials": 5,
        "core": {"k": 3, "dim": 2, "eps": 0.3, "norm": "2", "points": 100, "probes": 2000, "weight_scale": 1.5},
    },
}


def _type_ok(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        # norms may be written as numbers
        return isinstance(value, (str, int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def _merge(default: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    out = copy.deepcopy(default)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in default:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(default[key], dict):
            out[key] = _merge(default[key], value, where)
        elif not _type_ok(default[key], value):
            raise ConfigError(f"config key {where!r} has the wrong type ({type(value).__name__})")
        else:
            out[key] = value
    return out


def _apply_override(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path {key!r} crosses a non-object")
    node[parts[-1]] = value


def load_config(command: str, path: str | None, overrides, seed: int | None) -> dict:
    given = {}
    if path is not None:
        try:
            given = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    for item in overrides or []:
        _apply_override(given, item)
    if seed is not None:
        given["seed"] = seed
    cfg = _merge(DEFAULTS[command], given, "")
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def config_hash(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- helpers -----------------------------------------------------------------


def _vec(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} must be a non-empty list of finite numbers")
    return v


def _cov(block: dict, d: int):
    try:
        return audits.make_cov(d, block["kind"], float(block["rho"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _ridge_spec(cfg: dict):
    theta_star = _vec(cfg["theta_star"], "theta_star")
    try:
        return regression_spec(
            theta_star,
            float(cfg["sigma2"]),
            degree=cfg["degree"],
            cov=_cov(cfg["cov"], theta_star.size),
            x_family=cfg["family"],
            noise=cfg["noise"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _norm(value) -> NormSpec:
    try:
        return NormSpec(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _eps_list(values) -> list:
    eps = [float(e) for e in values]
    if not eps or any(not (e >= 0 and math.isfinite(e)) for e in eps):
        raise ConfigError("eps values must be finite and nonnegative")
    return eps


def _js(v) -> str:
    return json.dumps(np.asarray(v).tolist())


def _est(prefix: str, est) -> dict:
    if est is None:
        return {prefix: math.nan, f"{prefix}_se": math.nan}
    return {prefix: est.value, f"{prefix}_se": est.std_error}


class Result:
    """Rows of one command plus what is needed to write and grade them."""

    def __init__(self, columns, metrics):
        self.columns = ["schema_version", *columns]
        self.metrics = metrics  # (metric column, se column or None)
        self.rows: list[dict] = []
        self.summary: dict = {}

    def add(self, row: dict, *, gating: bool = True, passed: bool = True) -> None:
        row = {"schema_version": SCHEMA_VERSION, **row}
        missing = set(self.columns) - set(row)
        if missing:
            raise KeyError(f"row lacks columns {sorted(missing)}")
        row["_gating"] = gating
        row["_passed"] = passed
        self.rows.append(row)

    @property
    def ok(self) -> bool:
        return all(r["_passed"] or not r["_gating"] for r in self.rows) and not any(
            r.get("failed") for r in self.rows
        )


def _guard(result: Result, base: dict, fn) -> None:
    """Run ``fn`` for one row; numeric failures become a ``failed`` row."""
    try:
        fn()
    except (ValueError, ArithmeticError, FloatingPointError) as exc:
        row = {c: "" for c in result.columns[1:]}
        row.update(base)
        row["failed"] = 1
        row["message"] = f"{type(exc).__name__}: {exc}"
        result.add(row, gating=True, passed=False)


# -- commands ----------------------------------------------------------------


def cmd_verify_certificates(cfg, threads) -> Result:
    res = Result(
        ["check", "kind", "k", "n", "seed", "min_slack1", "min_slack2", "failures", "verdict", "failed", "message"],
        [("min_slack1", None), ("min_slack2", None), ("failures", None)],
    )
    seed, n, k = cfg["seed"], cfg["n"], cfg["k"]
    if n < 1 or k < 2:
        raise ConfigError("need n >= 1 and k >= 2")

    def add(check, s):
        res.add(
            dict(check=check, kind=s.kind, k=s.k, n=s.n, seed=seed, min_slack1=s.min_slack1,
                 min_slack2=s.min_slack2, failures=s.failures, verdict="pass" if s.passed else "fail",
                 failed=0, message=""),
            passed=s.passed,
        )

    for kind in LossKind:
        _guard(res, dict(check="random", kind=kind.value, k=k, n=n, seed=seed),
               lambda: add("random", audits.certificate_battery(kind, n, seed, k=k, threads=threads)))
    for kk in cfg["exhaustive_k"]:
        if kk < 2 or kk > 4:
            raise ConfigError("exhaustive_k entries must lie in [2, 4]")
        add("exhaustive", audits.zero_one_exhaustive(kk))
    gap, bad = audits.pinsker_battery(cfg["pinsker_n"], seed, k=k, threads=threads)
    res.add(
        dict(check="pinsker", kind="KL", k=k, n=cfg["pinsker_n"], seed=seed, min_slack1=gap, min_slack2=gap,
             failures=bad, verdict="pass" if bad == 0 else "fail", failed=0, message=""),
        passed=bad == 0,
    )
    return res


_T1_COLUMNS = [
    "task", "loss", "k", "degree", "dim", "family", "norm", "eps", "n", "seed", "params",
    "lhs", "lhs_se", "smoothness", "smoothness_se", "label", "label_se", "bound", "combined_se",
    "slack", "exact", "verdict", "failed", "message",
]
_T1_METRICS = [("lhs", "lhs_se"), ("smoothness", "smoothness_se"), ("label", "label_se"), ("bound", None)]


def _report_row(label, rep, n, seed, params) -> dict:
    return dict(
        **label, n=n, seed=seed, params=params, **_est("lhs", rep.lhs),
        **_est("smoothness", rep.smoothness_term), **_est("label", rep.label_term), bound=rep.bound,
        combined_se=rep.combined_se, slack=rep.slack, exact=int(rep.exact),
        verdict="pass" if rep.verdict else "fail", failed=0, message="",
    )


def cmd_audit_theorem1(cfg, threads) -> Result:
    res = Result(_T1_COLUMNS, _T1_METRICS)
    seed, n = cfg["seed"], cfg["n"]
    r, c = cfg["regression"], cfg["classification"]
    try:
        ridge = list(audits.ridge_battery(
            degrees=r["degrees"], dims=r["dims"], families=r["families"], eps_grid=_eps_list(r["eps"]),
            norms=[_norm(v).exponent for v in r["norms"]], sigma2=float(r["sigma2"]), noise=r["noise"],
            cov_kind=r["cov"]["kind"], rho=float(r["cov"]["rho"]), shift=float(r["theta_shift"]), seed=seed,
        ))
        clf = list(audits.classification_battery(
            ks=c["ks"], dims=c["dims"], families=c["families"], eps_grid=_eps_list(c["eps"]),
            norms=[_norm(v).exponent for v in c["norms"]], losses=c["losses"], scale=float(c["weight_scale"]),
            seed=seed,
        ))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    for label, model, spec, eps, ns in ridge:
        params = json.dumps({"theta": model.theta.tolist(), "theta_star": spec.theta_star.tolist()})

        def run(label=label, model=model, spec=spec, eps=eps, ns=ns, params=params):
            rep = theorem1_report(model, LossKind.LS, spec, eps, ns, n, seed, threads=threads)
            res.add(_report_row(label, rep, n, seed, params), gating=rep.exact, passed=rep.verdict)

        _guard(res, dict(label, n=n, seed=seed, params=params), run)
    for label, model, spec, eps, ns, loss in clf:
        params = json.dumps({"W": model.W.tolist(), "b": model.b.tolist(),
                             "W_ref": spec.classifier.W.tolist(), "b_ref": spec.classifier.b.tolist()})

        def run(label=label, model=model, spec=spec, eps=eps, ns=ns, loss=loss, params=params):
            rep = theorem1_report(model, loss, spec, eps, ns, n, seed, threads=threads)
            res.add(_report_row(label, rep, n, seed, params), gating=rep.exact, passed=rep.verdict)

        _guard(res, dict(label, n=n, seed=seed, params=params), run)
    return res


def cmd_audit_cor3(cfg, threads) -> Result:
    cols = [c for c in _T1_COLUMNS if c not in ("verdict", "failed", "message")]
    res = Result(
        cols + ["core_gap", "probe_points", "probes", "probe_certified", "probe_flips", "verdict", "failed",
                "message"],
        _T1_METRICS + [("core_gap", None)],
    )
    seed, n = cfg["seed"], cfg["n"]
    try:
        battery = list(audits.classification_battery(
            ks=cfg["ks"], dims=cfg["dims"], families=cfg["families"], eps_grid=_eps_list(cfg["eps"]),
            norms=[_norm(v).exponent for v in cfg["norms"]], losses=["ZERO_ONE"],
            scale=float(cfg["weight_scale"]), seed=seed,
        ))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    pts, probes = cfg["probe_points"], cfg["probes"]
    for label, model, spec, eps, ns, _ in battery:
        params = json.dumps({"W": model.W.tolist(), "b": model.b.tolist(),
                             "W_ref": spec.classifier.W.tolist(), "b_ref": spec.classifier.b.tolist()})

        def run(label=label, model=model, spec=spec, eps=eps, ns=ns, params=params):
            rep = cor3_report(model, spec, eps, ns, n, seed, threads=threads)
            by_term, by_core = audits.core_equality(model, spec, eps, ns, n, seed, threads=threads)
            gap = by_term - by_core
            X = sample_x_batch(spec, seed, np.arange(pts))
            probe = audits.core_probe(model, X, eps, ns, probes, seed) if pts else {}
            row = _report_row(label, rep, n, seed, params)
            flips = probe.get("flips_in_core", 0)
            passed = rep.verdict and gap == 0 and flips == 0
            row.update(core_gap=gap, probe_points=pts, probes=probes,
                       probe_certified=probe.get("certified", 0), probe_flips=flips,
                       verdict="pass" if passed else "fail")
            res.add(row, passed=passed)

        _guard(res, dict(label, n=n, seed=seed, params=params), run)
    return res


def cmd_ridge_analyze(cfg, threads) -> Result:
    res = Result(
        ["degree", "dim", "family", "norm", "eps", "n", "seed", "sigma2", "theta", "theta_star",
         "theta_sigma", "theta_dual", "l_eps", "l_eps_se", "l_eps_lower", "tradeoff_bound", "lhs", "lhs_se",
         "chain_ok", "chain_worst_link", "c_p", "c_p_se", "snr_p", "snr_p_se", "lambda_sup", "threshold_sup",
         "ratio_sup", "lambda_ones", "threshold_ones", "ratio_ones", "verdict", "failed", "message"],
        [("l_eps", "l_eps_se"), ("l_eps_lower", None), ("tradeoff_bound", None), ("lhs", "lhs_se"),
         ("ratio_sup", None), ("ratio_ones", None)],
    )
    seed, n, p = cfg["seed"], cfg["n"], cfg["degree"]
    spec = _ridge_spec({**cfg, "noise": "gaussian"})
    theta = _vec(cfg["theta"], "theta")
    if theta.size != spec.theta_star.size:
        raise ConfigError("theta and theta_star must have the same length")
    ns = _norm(cfg["norm"])
    eps_grid = _eps_list(cfg["eps"])
    model = RidgeModel(theta, p)

    c_p = c_p_constant(spec, p, n=cfg["c_p_n"], seed=seed)
    snr = snr_p(spec, n=cfg["c_p_n"], seed=seed)
    readings = threshold_readings(spec.cov, ns, p, c_p.value, snr.value) if spec.sigma2 > 0 else None
    base = dict(degree=p, dim=theta.size, family=spec.x_family, norm=ns.label, n=n, seed=seed,
                sigma2=spec.sigma2, theta=_js(theta), theta_star=_js(spec.theta_star))
    for eps in eps_grid:
        def run(eps=eps):
            inp = RidgeBoundInputs.from_model(model, spec.cov, ns, eps, spec.sigma2)
            L = local_smoothness(model, spec, eps, ns, n, seed, threads=threads)
            lower = l_eps_lower_bound(inp)
            rep = theorem1_report(model, LossKind.LS, spec, eps, ns, n, seed, threads=threads)
            chain = binomial_chain_audit(inp, spec, n, seed, threads=threads)
            worst = min(chain.links, key=lambda ln: (ln.ok, -abs(ln.diff.value)))
            dominated = L.value + VERDICT_SE * L.std_error >= lower
            bound = tradeoff_bound(inp)
            lhs_ok = rep.lhs.value + VERDICT_SE * rep.lhs.std_error >= bound
            row = dict(base, eps=eps, theta_sigma=inp.theta_sigma, theta_dual=inp.theta_dual,
                       **_est("l_eps", L), l_eps_lower=lower, tradeoff_bound=bound, **_est("lhs", rep.lhs),
                       chain_ok=int(chain.ok), chain_worst_link=f"{worst.left}{worst.relation}{worst.right}",
                       **_est("c_p", c_p), **_est("snr_p", snr))
            if readings is None:
                row.update(lambda_sup=math.nan, threshold_sup=math.inf, ratio_sup=0.0,
                           lambda_ones=math.nan, threshold_ones=math.inf, ratio_ones=0.0)
            else:
                (ls, ts), (lo, to) = readings["supremum"], readings["all_ones"]
                row.update(lambda_sup=ls, threshold_sup=ts.value, ratio_sup=eps / ts.value if ts.value else math.inf,
                           lambda_ones=lo, threshold_ones=to.value,
                           ratio_ones=eps / to.value if to.value else math.inf)
            passed = chain.ok and dominated and lhs_ok
            row.update(verdict="pass" if passed else "fail", failed=0, message="")
            res.add(row, passed=passed)

        _guard(res, dict(base, eps=eps), run)
    return res


_FRONTIER_COLUMNS = [
    "degree", "dim", "family", "norm", "eps", "sigma2", "theta_star", "eval_n", "seed", "train_seed", "train_n",
    "iterations", "step0", "init", "theta_hat", "theta_hat_dual", "objective", "steps", "R", "R_se", "R_eps",
    "R_eps_se", "L_eps", "L_eps_se", "bound", "lhs_se", "verdict", "failed", "message",
]
_FRONTIER_METRICS = [("R", "R_se"), ("R_eps", "R_eps_se"), ("L_eps", "L_eps_se"), ("bound", None),
                     ("theta_hat_dual", None)]


def _frontier(cfg, threads, eps_grid) -> Result:
    res = Result(_FRONTIER_COLUMNS, _FRONTIER_METRICS)
    spec = _ridge_spec(cfg)
    ns = _norm(cfg["norm"])
    try:
        tc = TrainConfig(**cfg["train"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg["eval_n"] < 2:
        raise ConfigError("eval_n must be >= 2")
    base = dict(degree=spec.degree, dim=spec.theta_star.size, family=spec.x_family, norm=ns.label,
                sigma2=spec.sigma2, theta_star=_js(spec.theta_star), eval_n=cfg["eval_n"], seed=cfg["seed"],
                train_seed=tc.seed, train_n=tc.n, iterations=tc.iterations, step0=tc.step0, init=tc.init)
    def run():
        for fr in frontier_sweep(spec, eps_grid, ns, tc, cfg["eval_n"], cfg["seed"], threads=threads):
            row = dict(base, eps=fr.eps, theta_hat=_js(fr.theta_hat), theta_hat_dual=float(dual_norm(fr.theta_hat, ns)),
                       objective=fr.objective, steps=fr.steps, **_est("R", fr.R), **_est("R_eps", fr.R_eps),
                       **_est("L_eps", fr.L_eps), bound=fr.bound, lhs_se=fr.lhs_se,
                       verdict="pass" if fr.verdict else "fail", failed=int(fr.failed), message=fr.message)
            res.add(row, passed=fr.verdict)

    _guard(res, dict(base, eps=eps_grid[0]), run)
    return res


def cmd_train(cfg, threads) -> Result:
    return _frontier(cfg, threads, _eps_list([cfg["eps"]]))


def cmd_frontier(cfg, threads) -> Result:
    return _frontier(cfg, threads, _eps_list(cfg["eps"]))


def cmd_oracle(cfg, threads) -> Result:
    res = Result(
        ["check", "instances", "seed", "max_rel_err", "exceed", "mismatches", "verdict", "failed", "message"],
        [("max_rel_err", None), ("mismatches", None)],
    )
    seed = cfg["seed"]
    if cfg["instances"] < 1 or not 1 <= cfg["max_dim"] <= 6:
        raise ConfigError("need instances >= 1 and max_dim in [1, 6]")

    def add(check, instances, rel, exceed, mism):
        ok = exceed == 0 and mism == 0
        res.add(dict(check=check, instances=instances, seed=seed, max_rel_err=rel, exceed=exceed, mismatches=mism,
                     verdict="pass" if ok else "fail", failed=0, message=""), passed=ok)

    for s in audits.closed_form_oracle(cfg["instances"], seed, max_dim=cfg["max_dim"],
                                       directions=cfg["directions"]):
        add(s.name, s.instances, s.max_rel_err, s.exceed, s.mismatches)
    rel, fails, count = audits.danskin_check(cfg["danskin_instances"], seed)
    add("danskin_gradient", count, rel, 0, fails)
    rel, ok = audits.lambda_star_check(cfg["lambda_dims"], cfg["lambda_trials"], seed)
    add("lambda_star_l2", len(cfg["lambda_dims"]) * cfg["lambda_trials"], rel, 0, int(not ok))

    cc = cfg["core"]
    ns = _norm(cc["norm"])
    clf = next(audits.classification_battery(
        ks=[cc["k"]], dims=[cc["dim"]], families=["gaussian"], eps_grid=[cc["eps"]], norms=[ns.exponent],
        losses=["ZERO_ONE"], scale=float(cc["weight_scale"]), seed=seed,
    ))
    _, model, spec, eps, _, _ = clf
    X = sample_x_batch(spec, seed, np.arange(cc["points"]))
    probe = audits.core_probe(model, X, eps, ns, cc["probes"], seed)
    add("core_probe", cc["points"], 0.0, probe["flips_in_core"], 0)
    return res


COMMANDS = {
    "verify-certificates": cmd_verify_certificates,
    "audit-theorem1": cmd_audit_theorem1,
    "audit-cor3": cmd_audit_cor3,
    "ridge-analyze": cmd_ridge_analyze,
    "train": cmd_train,
    "frontier": cmd_frontier,
    "oracle": cmd_oracle,
}


# -- output ------------------------------------------------------------------


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def write_outputs(command: str, cfg: dict, res: Result, out: Path, exit_code: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    table = [[r[c] for c in res.columns] for r in res.rows]
    (out / f"{command}.csv").write_text(_csv_text(res.columns, table))

    plot = []
    for r in res.rows:
        if r.get("failed"):
            continue
        ident = {c: r[c] for c in res.columns if c not in {"eps"} and c not in {m for m, _ in res.metrics}
                 and not c.endswith("_se") and c not in {"verdict", "slack", "combined_se", "failures", "message"}}
        h = config_hash({"command": command, **ident})
        for metric, se in res.metrics:
            val = r.get(metric, "")
            if val == "" or val is None:
                continue
            plot.append([h, r.get("eps", ""), metric, val, r[se] if se else ""])
    (out / f"{command}_plot.csv").write_text(_csv_text(["config_hash", "eps", "metric", "value", "se"], plot))

    report = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "config_hash": config_hash({"command": command, **cfg}),
        "exit_code": exit_code,
        "summary": {
            "rows": len(res.rows),
            "gating_rows": sum(bool(r["_gating"]) for r in res.rows),
            "passed": sum(bool(r["_passed"]) for r in res.rows),
            "failed_rows": sum(bool(r.get("failed")) for r in res.rows),
            "gating_failures": sum(bool(r["_gating"] and not r["_passed"]) for r in res.rows),
        },
        "rows": [
            {**{c: _jsonable(r[c]) for c in res.columns}, "gating": bool(r["_gating"])} for r in res.rows
        ],
    }
    (out / f"{command}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tradeoff-lab", description="Audit the accuracy/robustness trade-off bounds.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config; defaults are used for missing keys")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a dotted config key; VALUE is parsed as JSON when possible")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--threads", type=int, help="worker threads (default: $TRADEOFF_LAB_THREADS or 1)")
    ap.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads is not None and args.threads < 1:
        print("tradeoff-lab: error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.command, args.config, args.set, args.seed)
        res = COMMANDS[args.command](cfg, args.threads)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"tradeoff-lab: config error: {exc}", file=sys.stderr)
        return 1
    code = 0 if res.ok else 2
    write_outputs(args.command, cfg, res, Path(args.out), code)
    gating = [r for r in res.rows if r["_gating"]]
    print(f"{args.command}: {len(res.rows)} rows, {sum(r['_passed'] for r in gating)}/{len(gating)} gating rows "
          f"passed -> {Path(args.out) / (args.command + '.csv')}")
    return code


if __name__ == "__main__":
    sys.exit(main())
