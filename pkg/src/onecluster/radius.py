"""Private estimate of the radius of a small ball holding about t points."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameter
from .geometry import GridDomain, as_points, score_L_many
from .privacy import LedgerEntry, PrivacyBudget, sample_laplace
from .selection import BASELINE, ExponentialMechanism, QualityProblem, quasiconcave_solve


@dataclass
class RadiusResult:
    radius: float
    gamma: float
    ledger: list[LedgerEntry]
    advertised_loss: float
    early_exit: bool = False
    index: int = 0

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "gamma": self.gamma,
            "advertised_loss": self.advertised_loss,
            "early_exit": self.early_exit,
            "ledger": [e.as_dict() for e in self.ledger],
        }


def radius_candidates(domain: GridDomain) -> np.ndarray:
    """Solution set {0, 1/(2|X|), 2/(2|X|), ..., ceil(sqrt d)}."""
    top = 2 * domain.levels * math.ceil(math.sqrt(domain.d))
    return np.arange(top + 1) / (2.0 * domain.levels)


def _radius_grid_scores(points: np.ndarray, domain: GridDomain, t: int):
    # L on the half-step grid covers every r in F and every r/2.
    top = 2 * domain.levels * math.ceil(math.sqrt(domain.d))
    half_grid = np.arange(2 * top + 1) / (4.0 * domain.levels)
    scores = score_L_many(points, half_grid, t)
    at_r = scores[2 * np.arange(top + 1)]
    at_half = scores[np.arange(top + 1)]
    return at_r, at_half


def radius_quality(points, domain: GridDomain, t: int, gamma: float) -> np.ndarray:
    """Q(r, S) = 1/2 min{t - L(r/2, S), L(r, S) - t + 4 gamma} for every r in F."""
    at_r, at_half = _radius_grid_scores(as_points(points), domain, t)
    return 0.5 * np.minimum(t - at_half, at_r - t + 4.0 * gamma)


def radius_gamma(domain: GridDomain, budget: PrivacyBudget, beta: float,
                 solver: ExponentialMechanism = BASELINE) -> float:
    """Promise the configured solver needs for its step: alpha=1/2, (eps/2, delta), beta/2."""
    size = len(radius_candidates(domain))
    return solver.min_promise(size, 0.5, budget.scaled(0.5, 1.0), beta / 2)


def good_radius(points, t: int, beta: float, budget: PrivacyBudget, rng: np.random.Generator,
                domain: GridDomain, solver: ExponentialMechanism = BASELINE,
                gamma_scale: float = 1.0) -> RadiusResult:
    """Privately find r with a ball of radius r holding about t points and r <= 4 r_opt.

    Spends ``(eps/2, 0)`` on a Laplace test for a zero-radius cluster and
    ``(eps/2, delta)`` on the quasi-concave search. With probability
    ``1 - beta`` some ball of the returned radius contains at least
    ``t - advertised_loss`` points. ``gamma_scale`` multiplies the solver's
    promise (values below 1 void the formal guarantee).
    """
    points = domain.validate(as_points(points))
    n = len(points)
    if not (1 <= t <= n):
        raise InvalidParameter(f"need 1 <= t <= n (t={t}, n={n})")
    if not (0 < beta < 1):
        raise InvalidParameter("beta must lie in (0, 1)")
    if budget.delta == 0 and solver is not BASELINE:
        raise InvalidParameter(f"the {solver.name} solver needs delta > 0")
    if not (gamma_scale > 0):
        raise InvalidParameter("gamma_scale must be positive")

    eps = budget.epsilon
    gamma = gamma_scale * radius_gamma(domain, budget, beta, solver)
    advertised = 4.0 * gamma + (4.0 / eps) * math.log(1.0 / beta)
    test_budget = PrivacyBudget(eps / 2, 0.0)
    search_budget = PrivacyBudget(eps / 2, budget.delta)
    ledger = [LedgerEntry("good_radius.zero_cluster_laplace", test_budget),
              LedgerEntry(f"good_radius.quasiconcave[{solver.name}]", search_budget)]

    candidates = radius_candidates(domain)
    at_r, at_half = _radius_grid_scores(points, domain, t)

    noisy_zero = at_r[0] + sample_laplace(4.0 / eps, rng)
    if noisy_zero > t - 2.0 * gamma - (4.0 / eps) * math.log(2.0 / beta):
        return RadiusResult(0.0, gamma, ledger, advertised, early_exit=True, index=0)

    quality = 0.5 * np.minimum(t - at_half, at_r - t + 4.0 * gamma)
    problem = QualityProblem(len(candidates), lambda _: quality, promise=gamma, alpha=0.5,
                             decode=lambda i: candidates[i])
    index = quasiconcave_solve(problem, points, search_budget, beta / 2, rng, solver=solver,
                               strict=gamma_scale >= 1)
    return RadiusResult(float(candidates[index]), gamma, ledger, advertised, index=index)
