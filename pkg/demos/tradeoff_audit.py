"""Auditing R + R_eps >= max(smoothness term, label term) for a cubic ridge model.

As eps grows the smoothness term L_eps/6 overtakes the irreducible label
term sigma^2/3, and the left-hand side has to rise with it.
"""

from tradeoff_lab import LossKind, NormSpec, RidgeModel, regression_spec, theorem1_report

spec = regression_spec([0.8, -0.4], sigma2=0.5, degree=3, x_family="rademacher")
model = RidgeModel([0.7, -0.3], degree=3)

print(f"{'eps':>5} {'R+R_eps':>10} {'smooth':>10} {'label':>8} {'verdict':>8}")
for eps in (0.0, 0.05, 0.1, 0.2, 0.4):
    rep = theorem1_report(model, LossKind.LS, spec, eps, NormSpec("inf"), n=100_000, seed=3)
    print(
        f"{eps:5.2f} {rep.lhs.value:10.4f} {rep.smoothness_term.value:10.4f} "
        f"{rep.label_term.value:8.4f} {'pass' if rep.verdict else 'FAIL':>8}"
    )
