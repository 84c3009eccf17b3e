"""Why the three losses admit certificate pairs.

For each loss we draw random quadruples (u, v, u', v') and report the
smallest slack of both pairwise conditions. A negative slack would break the
lower bound on R + R_eps, so every minimum printed below should be >= 0.
"""

import numpy as np

from tradeoff_lab.audits import certificate_battery, pinsker_battery, zero_one_exhaustive
from tradeoff_lab.losses import LossKind, check_pair_conditions, eval_loss

print("A worked least-squares quadruple: u=1, v=0, u'=0, v'=1")
c = check_pair_conditions(LossKind.LS, 1.0, 0.0, 0.0, 1.0)
print(f"  condition 1 slack = {float(c.slack1):.4f} (1/2 + 1/2 + 1/2 - 1/6)")

print("\nRandom batteries (200k quadruples each):")
for kind in LossKind:
    s = certificate_battery(kind, 200_000, seed=1)
    print(f"  {kind.value:9s} min slacks {s.min_slack1:.3g} / {s.min_slack2:.3g}, violations {s.failures}")

# 0/1 only depends on argmax patterns, so a finite enumeration is a proof
for k in (2, 3):
    s = zero_one_exhaustive(k)
    print(f"  ZERO_ONE exhaustive k={k}: {s.n} tuples, violations {s.failures}")

# the KL pair rests on Pinsker's inequality
gap, bad = pinsker_battery(100_000, seed=2)
print(f"\nKL(v||u) - ||u-v||_1^2/2 never negative: min {gap:.3g}, violations {bad}")

u = np.array([0.5, 0.5])
print(f"KL loss of a coin-flip prediction against a sure label: {float(eval_loss(LossKind.KL, u, [1.0, 0.0])):.4f} (log 2)")
