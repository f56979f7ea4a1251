"""Find the radius of a planted cluster without seeing the data.

Run: python demos/03_radius.py
"""
from onecluster import GridDomain, PrivacyBudget, as_generator, generate_planted, good_radius, oracle_2approx

dom = GridDomain(2, 129)
B = PrivacyBudget(1.0, 1e-6)
for seed in range(3):
    rng = as_generator(seed)
    inst = generate_planted(dom, 1500, 700, 0.04, rng)
    oracle = oracle_2approx(inst.points, 700).radius_2approx
    res = good_radius(inst.points, 700, 0.1, B, rng, dom)
    print(f"seed {seed}: private radius {res.radius:.4f}  non-private 2-approx {oracle:.4f}  "
          f"ratio {res.radius / oracle:.2f}  points possibly lost {res.advertised_loss:.0f}")
    for entry in res.ledger:
        print("   ", entry.mechanism, entry.budget)
