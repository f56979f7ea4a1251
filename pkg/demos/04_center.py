"""Locate the center of a cluster once its radius is known.

Run: python demos/04_center.py   (about 15 seconds)
"""
import numpy as np

from onecluster import (PRACTICAL_CONSTANTS, GridDomain, PrivacyBudget, as_generator, ball_count,
                        generate_planted, good_center, oracle_2approx)
from onecluster.exceptions import SearchFailed

dom = GridDomain(6, 1025)
B = PrivacyBudget(1.0, 1e-6)

# The final averaging step adds noise that shrinks like 1/n, so the center
# error at n = 2000 is of the order of the cube itself; at n = 20000 it is not.
for n in (2000, 20000):
    rng = as_generator(200)
    t = 4 * n // 5
    inst = generate_planted(dom, n, t, 0.01, rng)
    r = oracle_2approx(inst.points, t).radius_2approx
    res = good_center(inst.points, r, t, 0.1, B, rng, constants=PRACTICAL_CONSTANTS)
    print(f"n={n}: projected dimension {res.k}, rounds {res.rounds_used}, "
          f"center error {np.linalg.norm(res.center - inst.center):.3f} "
          f"(cube diameter {np.sqrt(6):.2f}), capture radius {res.capture_radius:.2f}, "
          f"ball holds {ball_count(inst.points, res.center, res.capture_radius)} points (target {t})")
print("ledger of the last run:")
for entry in res.ledger:
    print("   ", entry.mechanism, entry.budget)

# A radius far below the truth never finds a heavy box; the budget is still accounted for.
try:
    good_center(inst.points, 1e-7, t, 0.1, B, rng, constants=PRACTICAL_CONSTANTS.with_(max_rounds=30))
except SearchFailed as err:
    print("tiny radius:", type(err).__name__, "after spending",
          sum(e.budget.epsilon for e in err.ledger), "epsilon")
