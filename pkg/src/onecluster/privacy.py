"""Noise samplers, mechanism calibration and privacy-budget arithmetic.

Every randomized function takes an explicit ``numpy.random.Generator``; there
is no module-level randomness. Samplers are idealized floating-point samplers
and are not hardened against floating-point side channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidParameter

_TWO53 = float(2**53)


def as_generator(seed) -> np.random.Generator:
    """Coerce an int seed (or an existing Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise InvalidParameter("an explicit seed or Generator is required")
    return np.random.default_rng(seed)


def split_rng(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Independent child generators for parallel trials."""
    return list(rng.spawn(count))


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise InvalidParameter(f"epsilon must be positive, got {self.epsilon}")
        if not (0 <= self.delta < 1):
            raise InvalidParameter(f"delta must lie in [0, 1), got {self.delta}")

    def scaled(self, eps_frac: float, delta_frac: float | None = None) -> "PrivacyBudget":
        """Budget with epsilon (and delta) multiplied by the given fractions."""
        if delta_frac is None:
            delta_frac = eps_frac
        return PrivacyBudget(self.epsilon * eps_frac, self.delta * delta_frac)

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta}


class Norm(str, Enum):
    L1 = "L1"
    L2 = "L2"


@dataclass(frozen=True)
class Sensitivity:
    value: float
    norm: Norm = Norm.L1

    def __post_init__(self):
        if self.value < 0:
            raise InvalidParameter(f"sensitivity must be nonnegative, got {self.value}")


class CompositionRule(str, Enum):
    BASIC = "basic"
    ADVANCED = "advanced"


@dataclass(frozen=True)
class LedgerEntry:
    """One line of a privacy audit trail."""

    mechanism: str
    budget: PrivacyBudget
    rule: CompositionRule = CompositionRule.BASIC

    def as_dict(self) -> dict:
        return {"mechanism": self.mechanism, **self.budget.as_dict(), "rule": self.rule.value}


# -- samplers ---------------------------------------------------------------


def _open_uniform(rng: np.random.Generator, size=None):
    # Uniform on the open interval (0, 1): (k + 1/2) / 2^53 never hits 0 or 1.
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (k + 0.5) / _TWO53


def sample_laplace(scale: float, rng: np.random.Generator, size=None):
    """Draw from Lap(scale) by inverting the Laplace CDF.

    Returns a float when ``size`` is None, otherwise an ndarray.
    """
    if not (scale > 0):
        raise InvalidParameter(f"Laplace scale must be positive, got {scale}")
    u = _open_uniform(rng, size) - 0.5
    x = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(x) if size is None else x


def sample_gaussian(sigma: float, rng: np.random.Generator, size=None):
    if sigma < 0:
        raise InvalidParameter(f"sigma must be nonnegative, got {sigma}")
    x = sigma * rng.standard_normal(size)
    return float(x) if size is None else x


# -- mechanisms -------------------------------------------------------------


def laplace_mechanism(value, sensitivity: Sensitivity | float, budget: PrivacyBudget,
                      rng: np.random.Generator):
    """Release ``value + Lap(k / epsilon)`` (coordinate-wise for arrays)."""
    if not isinstance(sensitivity, Sensitivity):
        sensitivity = Sensitivity(float(sensitivity))
    if sensitivity.norm is not Norm.L1:
        raise InvalidParameter("the Laplace mechanism is calibrated to L1 sensitivity")
    if budget.delta != 0:
        raise InvalidParameter("the Laplace mechanism is pure: budget.delta must be 0")
    if not (sensitivity.value > 0):
        raise InvalidParameter("sensitivity must be positive")
    scale = sensitivity.value / budget.epsilon
    if np.ndim(value) == 0:
        return float(value) + sample_laplace(scale, rng)
    value = np.asarray(value, dtype=float)
    return value + sample_laplace(scale, rng, size=value.shape)


def gaussian_sigma(sensitivity: Sensitivity | float, budget: PrivacyBudget) -> float:
    """Smallest sigma of the classical Gaussian mechanism: (k/eps) sqrt(2 ln(1.25/delta))."""
    k = sensitivity.value if isinstance(sensitivity, Sensitivity) else float(sensitivity)
    if isinstance(sensitivity, Sensitivity) and sensitivity.norm is not Norm.L2:
        raise InvalidParameter("the Gaussian mechanism is calibrated to L2 sensitivity")
    if not (0 < budget.epsilon < 1):
        raise InvalidParameter("the Gaussian mechanism requires 0 < epsilon < 1")
    if not (0 < budget.delta < 1):
        raise InvalidParameter("the Gaussian mechanism requires 0 < delta < 1")
    return (k / budget.epsilon) * math.sqrt(2.0 * math.log(1.25 / budget.delta))


def gaussian_mechanism(value, sensitivity, budget: PrivacyBudget, rng: np.random.Generator):
    sigma = gaussian_sigma(sensitivity, budget)
    value = np.asarray(value, dtype=float)
    return value + sample_gaussian(sigma, rng, size=value.shape)


# -- composition ------------------------------------------------------------


def compose_basic(budgets: Iterable[PrivacyBudget]) -> PrivacyBudget:
    """k-fold basic composition: sum the epsilons and the deltas.

    Sums are taken with ``math.fsum`` so the result is the correctly rounded
    exact sum, independent of order.
    """
    budgets = list(budgets)
    if not budgets:
        raise InvalidParameter("cannot compose an empty list of budgets")
    return PrivacyBudget(math.fsum(b.epsilon for b in budgets),
                         math.fsum(b.delta for b in budgets))


def compose_advanced(k: int, per_step: PrivacyBudget, delta_prime: float) -> PrivacyBudget:
    """Advanced composition of k adaptive (eps, delta) mechanisms.

    Returns ``(2 k eps^2 + eps sqrt(2 k ln(1/delta')), k delta + delta')``.
    """
    if k < 1 or int(k) != k:
        raise InvalidParameter(f"k must be a positive integer, got {k}")
    if not (delta_prime > 0):
        raise InvalidParameter(f"delta_prime must be positive, got {delta_prime}")
    eps = per_step.epsilon
    eps_out = 2 * k * eps * eps + eps * math.sqrt(2 * k * math.log(1.0 / delta_prime))
    return PrivacyBudget(eps_out, k * per_step.delta + delta_prime)


def amplify_by_subsampling(inner: PrivacyBudget, m: int, n: int) -> PrivacyBudget:
    """Privacy of running an m-row mechanism on m rows drawn with replacement from n.

    Valid for inner epsilon <= 1 and n >= 2m.
    """
    if m < 1 or n < 1:
        raise InvalidParameter("m and n must be positive")
    if n < 2 * m:
        raise InvalidParameter(f"amplification needs n >= 2m (n={n}, m={m})")
    if inner.epsilon > 1:
        raise InvalidParameter("amplification needs inner epsilon <= 1")
    eps = 6.0 * inner.epsilon * m / n
    return PrivacyBudget(eps, math.exp(eps) * (4.0 * m / n) * inner.delta)


def ledger_total(ledger: Sequence[LedgerEntry]) -> PrivacyBudget:
    return compose_basic(entry.budget for entry in ledger)
