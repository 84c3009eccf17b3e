"""eps-cores of a three-class linear classifier.

A point is in the eps-core of its region when every margin beats
eps * ||w_i - w_j||_*. The adversarial 0/1 loss is exactly the indicator of
falling outside every core, so the 0/1 bound can be computed with no search.
"""

import numpy as np

from tradeoff_lab import LinearClassifier, NormSpec, classification_spec, core_membership, cor3_report
from tradeoff_lab.audits import core_probe
from tradeoff_lab.distributions import sample_x_batch

c = LinearClassifier(np.array([[2.0, 0.0], [-1.0, 1.5], [-1.0, -1.5]]))
spec = classification_spec(c)

cert = core_membership(c, [1.0, 0.2], 0.3, NormSpec(2))
print(f"class {cert.cls}: margins {np.round(cert.margins, 3)} vs thresholds {np.round(cert.thresholds, 3)}")
print(f"in core: {cert.in_core}")

for eps in (0.0, 0.1, 0.3, 0.6):
    rep = cor3_report(c, spec, eps, NormSpec(2), n=100_000, seed=0)
    print(f"eps={eps:.1f}: P(outside cores)={rep.smoothness_term.value:.4f}  "
          f"R+R_eps={rep.lhs.value:.4f}  verdict={'pass' if rep.verdict else 'FAIL'}")

X = sample_x_batch(spec, 1, np.arange(200))
probe = core_probe(c, X, 0.3, NormSpec(2), probes=5000, seed=2)
print(f"random probes: {probe['flips_in_core']} flips at {probe['certified']} certified points, "
      f"flips found at {probe['found']} of {probe['outside']} uncertified points")
