"""End to end: radius search then center search on a planted instance.

Run: python demos/05_one_cluster.py   (about 15 seconds)

The returned radius is the private radius times the approximation factor
w = 4 * capture * sqrt(k), which is in the hundreds even with the practical
constants. In the unit square that radius covers everything; the center
estimate is the informative part of the output here.
"""
import numpy as np

from onecluster import (PRACTICAL_CONSTANTS, GridDomain, PrivacyBudget, as_generator, ball_count,
                        generate_planted, ledger_total, oracle_2approx, solve_one_cluster)

dom = GridDomain(2, 1025)
B = PrivacyBudget(1.0, 1e-6)
n, t = 12000, 9000
for seed in (300, 301):
    rng = as_generator(seed)
    inst = generate_planted(dom, n, t, 0.02, rng)
    res = solve_one_cluster(inst.points, t, 0.1, B, rng, dom, constants=PRACTICAL_CONSTANTS)
    oracle = oracle_2approx(inst.points, t).radius_2approx
    print(f"seed {seed}: private radius step {res.radius_result.radius:.3f} "
          f"(non-private 2-approx {oracle:.3f}), final radius {res.radius:.1f}, "
          f"center error {np.linalg.norm(res.center - inst.center):.3f}, "
          f"ball holds {ball_count(inst.points, res.center, res.radius)} "
          f"(guaranteed {res.found_count_bound:.0f}), total spend {ledger_total(res.ledger)}")
