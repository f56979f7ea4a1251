"""Private selection: stable choice, AboveThreshold and quasi-concave search.

Run: python demos/02_selection.py
"""
from collections import Counter

import numpy as np

from onecluster import (NO_HEAVY_CELL, AboveThreshold, PrivacyBudget, QualityProblem, as_generator,
                        quasiconcave_solve, stable_choice)

rng = as_generator(1)
B = PrivacyBudget(1.0, 1e-6)

# Stable choice releases a label only when it clearly dominates.
labels = ["north"] * 300 + ["south"] * 40 + ["east"] * 5
print("stable choice on a dominated histogram:", stable_choice(labels, B, 0.1, rng))
# With few rows no cell clears the noise threshold, and nothing is released.
print("small histogram:", stable_choice(["a"] * 20 + ["b"] * 19, B, 0.1, rng) is NO_HEAVY_CELL
      and "no heavy cell")

# AboveThreshold pays once, however many queries come back below the bar.
svt = AboveThreshold(threshold=100.0, budget=PrivacyBudget(1.0), rng=rng)
stream = [3, 20, 45, 60, 80, 150, 10]
for i, value in enumerate(stream):
    if svt.query(value):
        print(f"first query above 100: index {i} (value {value})")
        break

# Quasi-concave quality over 1000 ordered solutions: the true peak is near 600.
xs = np.arange(1000)
data = rng.normal(600, 40, size=4000)


def quality(db):
    # Count of points inside a window of width 100 starting at x; sensitivity 1, unimodal-ish.
    srt = np.sort(db)
    return (np.searchsorted(srt, xs + 100) - np.searchsorted(srt, xs)).astype(float)


problem = QualityProblem(size=1000, quality=quality, promise=500)
picks = Counter(quasiconcave_solve(problem, data, B, 0.1, rng) // 50 * 50 for _ in range(20))
print("window starts chosen (bucketed by 50):", dict(sorted(picks.items())))
