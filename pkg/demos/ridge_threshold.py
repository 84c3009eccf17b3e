"""Closed forms for polynomial ridge regression and the robustness threshold.

The threshold depends on lambda*, the largest ratio ||theta||_Sigma^2 /
||theta||_*^2. For l_inf perturbations and Sigma = I this supremum is 1, while
the all-ones direction gives 1/d; both readings are shown because they lead
to very different dimension dependence.
"""

from tradeoff_lab import Covariance, NormSpec, RidgeBoundInputs, epsilon_threshold, threshold_readings
from tradeoff_lab import l_eps_lower_bound, tradeoff_bound

inp = RidgeBoundInputs(theta_sigma=1.0, theta_dual=1.0, degree=2, eps=1.0, sigma2=1.0)
print(f"L_eps lower bound at a = t = 1, p = 2: {l_eps_lower_bound(inp)}")
print(f"trade-off bound max(gap^2/12, sigma^2/3): {tradeoff_bound(inp)}")

t = epsilon_threshold(2, c_p=3**0.25, lambda_star=1.0, snr_p=81.0)
print(f"\nworked threshold (p=2, SNR=81): {t.value:.6f}  branches {t.power_branch:.5f} / {t.root_branch:.5f}")

print("\nthreshold for p=1, SNR=1 under l_inf perturbations:")
for d in (1, 10, 100, 1000):
    r = threshold_readings(Covariance.identity(d), NormSpec("inf"), 1, 1.0, 1.0)
    (ls, ts), (lo, to) = r["supremum"], r["all_ones"]
    print(f"  d={d:5d}  supremum lambda*={ls:.3g} -> {ts.value:.4f}   all-ones lambda*={lo:.3g} -> {to.value:.4f}")
