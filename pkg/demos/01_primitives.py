"""Noise mechanisms and budget accounting.

Run: python demos/01_primitives.py
"""
import numpy as np

from onecluster import (PrivacyBudget, amplify_by_subsampling, as_generator, compose_advanced,
                        compose_basic, gaussian_sigma, laplace_mechanism)

rng = as_generator(0)

# A counting query has sensitivity 1; Laplace noise of scale 1/eps hides any one row.
count = 412
noisy = [float(laplace_mechanism(count, 1.0, PrivacyBudget(0.5), rng)) for _ in range(5)]
print("true count", count, "-> noisy releases", np.round(noisy, 1))

# Gaussian noise needs a delta (and epsilon below 1); sigma grows as epsilon shrinks.
for eps in (0.9, 0.5, 0.1):
    print(f"gaussian sigma at eps={eps}, delta=1e-6:", round(gaussian_sigma(1.0, PrivacyBudget(eps, 1e-6)), 3))

# Ten releases at (0.1, 1e-7): basic composition adds up, advanced trades delta for epsilon.
step = PrivacyBudget(0.1, 1e-7)
print("basic, 10 steps:   ", compose_basic([step] * 10))
print("advanced, 10 steps:", compose_advanced(10, step, 1e-6))
print("advanced, 500 steps:", compose_advanced(500, PrivacyBudget(0.01, 1e-9), 1e-6))

# Running on a small random subsample makes the whole pipeline more private.
print("inner (1, 1e-6) on 1000 of 100000 rows:", amplify_by_subsampling(PrivacyBudget(1.0, 1e-6), 1000, 100_000))
