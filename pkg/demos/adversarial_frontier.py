"""Adversarial training of a linear model across a grid of eps.

Each row trains with the exact inner maximisation, then evaluates standard
and adversarial risk on fresh draws. The fitted coefficients shrink as eps
grows, trading standard risk for robustness, and every row respects the bound.
"""

import numpy as np

from tradeoff_lab import NormSpec, TrainConfig, frontier_sweep, regression_spec

spec = regression_spec([1.0, -0.5], sigma2=0.25)
rows = frontier_sweep(
    spec, [0.0, 0.1, 0.2, 0.4, 0.8], NormSpec(2), TrainConfig(step0=0.5, iterations=400, n=1000), eval_n=100_000, seed=0
)

print(f"{'eps':>5} {'theta_hat':>18} {'R':>8} {'R_eps':>8} {'bound':>8} verdict")
for r in rows:
    theta = np.array2string(r.theta_hat, precision=3)
    print(f"{r.eps:5.2f} {theta:>18} {r.R.value:8.4f} {r.R_eps.value:8.4f} {r.bound:8.4f} "
          f"{'pass' if r.verdict else 'FAIL'}")
