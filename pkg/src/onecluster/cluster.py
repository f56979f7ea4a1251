"""End-to-end private 1-cluster: GoodRadius followed by GoodCenter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .center import PAPER_CONSTANTS, CenterConstants, CenterResult, good_center
from .exceptions import InvalidParameter, SearchFailed
from .geometry import GridDomain, as_points
from .privacy import LedgerEntry, PrivacyBudget
from .radius import RadiusResult, good_radius
from .selection import BASELINE, ExponentialMechanism


@dataclass
class ClusterResult:
    center: np.ndarray
    radius: float
    found_count_bound: float
    ledger: list[LedgerEntry]
    radius_result: RadiusResult | None = None
    center_result: CenterResult | None = None
    stats: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "center": [float(c) for c in self.center],
            "radius": self.radius,
            "found_count_bound": self.found_count_bound,
            "ledger": [e.as_dict() for e in self.ledger],
            "search_radius": self.radius_result.radius if self.radius_result else None,
            "gamma": self.radius_result.gamma if self.radius_result else None,
            "rounds_used": self.center_result.rounds_used if self.center_result else None,
        }


def approximation_factor(n: int, beta: float, constants: CenterConstants = PAPER_CONSTANTS) -> float:
    """Ratio w between the returned radius and r_opt: 4 * capture * sqrt(k)."""
    k = math.ceil(constants.jl * math.log2(2.0 * n / beta))
    return 4.0 * constants.capture * math.sqrt(max(k, 1))


def solve_one_cluster(points, t: int, beta: float, budget: PrivacyBudget,
                      rng: np.random.Generator, domain: GridDomain,
                      constants: CenterConstants = PAPER_CONSTANTS,
                      solver: ExponentialMechanism = BASELINE, gamma_scale: float = 1.0,
                      radius_share: float = 0.5) -> ClusterResult:
    """Privately return a ball holding about t of the points.

    The radius search gets ``radius_share`` of (eps, delta) and the center
    search the rest. The center search is asked for
    ``t - radius_result.advertised_loss`` points, the count GoodRadius
    guarantees inside a ball of its radius. A zero radius is replaced by
    the smallest positive candidate ``1 / (2 |X|)``.

    On :class:`SearchFailed` the exception's ledger is extended with the
    radius entries before re-raising, so it reflects everything spent.
    """
    points = domain.validate(as_points(points))
    n = len(points)
    if not (1 <= t <= n):
        raise InvalidParameter(f"need 1 <= t <= n (t={t}, n={n})")
    if not (0 < radius_share < 1):
        raise InvalidParameter("radius_share must lie in (0, 1)")
    radius_budget = budget.scaled(radius_share)
    center_budget = budget.scaled(1.0 - radius_share)

    rad = good_radius(points, t, beta, radius_budget, rng, domain, solver=solver,
                      gamma_scale=gamma_scale)
    r = rad.radius if rad.radius > 0 else 1.0 / (2 * domain.levels)
    t_center = max(1, math.floor(t - rad.advertised_loss))
    try:
        cen = good_center(points, r, t_center, beta, center_budget, rng, constants)
    except SearchFailed as exc:
        exc.ledger = rad.ledger + exc.ledger
        raise
    return ClusterResult(
        center=cen.center, radius=cen.capture_radius,
        found_count_bound=t_center - cen.advertised_loss,
        ledger=rad.ledger + cen.ledger, radius_result=rad, center_result=cen,
        stats={"search_radius": r, "t_center": t_center})
