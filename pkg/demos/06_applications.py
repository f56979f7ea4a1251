"""Two applications: sample-and-aggregate and a private interior point.

Run: python demos/06_applications.py   (about half a minute)
"""
import numpy as np

from onecluster import (PRACTICAL_CONSTANTS, GridDomain, PrivacyBudget, as_generator, int_point,
                        median_analysis, sample_aggregate)

B = PrivacyBudget(1.0, 1e-6)

# Sample and aggregate: the coordinate-wise median of small fragments is stable on
# concentrated data, so clustering the fragment outputs recovers it privately.
dom = GridDomain(2, 1025)
rng = as_generator(5)
data = np.clip([0.3, 0.7] + 0.01 * rng.standard_normal((10**6, 2)), 0, 1)
res = sample_aggregate(data, median_analysis(dom), 50, 0.8, 0.1, B, rng,
                       constants=PRACTICAL_CONSTANTS, enforce_generalization=False)
print(f"sample-and-aggregate point {np.round(res.point, 3)} (true median [0.3 0.7]), "
      f"error {np.linalg.norm(res.point - [0.3, 0.7]):.3f}, fragments {res.k}, "
      f"cluster radius {res.cluster.radius:.2f}")
print("guarantee with respect to all rows:", res.outer_budget)

# Interior point: a private value between the min and max of the data.
dom1 = GridDomain(1, 2**16)
rng = as_generator(7000)
vals = rng.integers(0, dom1.levels, size=4500) / (dom1.levels - 1)
res = int_point(vals, 3000, 2500, 0.1, B, rng, dom1, constants=PRACTICAL_CONSTANTS)
print(f"interior point {res.value:.4f} inside [{vals.min():.4f}, {vals.max():.4f}]")
