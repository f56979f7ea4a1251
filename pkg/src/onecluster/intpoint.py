"""Interior point from a 1-cluster solver: a runnable form of the reduction.

Given m values on a one-dimensional grid, the middle n of them are handed to
the 1-cluster solver; the returned interval is cut into pieces whose edge
points are then scored by how deep they sit inside the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .center import PAPER_CONSTANTS, CenterConstants
from .cluster import ClusterResult, approximation_factor, solve_one_cluster
from .exceptions import InvalidParameter
from .geometry import GridDomain
from .privacy import LedgerEntry, PrivacyBudget
from .selection import BASELINE, RECCONCAVE, ExponentialMechanism, QualityProblem, \
    quasiconcave_solve


@dataclass
class IntPointResult:
    value: float
    center: float
    radius: float
    candidates: np.ndarray
    ledger: list[LedgerEntry]
    cluster: ClusterResult | None = None
    stats: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"value": self.value, "center": self.center, "radius": self.radius,
                "candidates": len(self.candidates),
                "ledger": [e.as_dict() for e in self.ledger], **self.stats}


def middle_entries(values, n: int) -> np.ndarray:
    """The n middle order statistics: sorted indices floor((m-n)/2) onward."""
    values = np.sort(np.asarray(values, dtype=float).ravel())
    m = len(values)
    if not (1 <= n <= m):
        raise InvalidParameter(f"need 1 <= n <= m (n={n}, m={m})")
    start = (m - n) // 2
    return values[start:start + n]


def interior_quality(values, candidates) -> np.ndarray:
    """q(S, a) = min(#{x <= a}, #{x >= a}) for each candidate a."""
    values = np.sort(np.asarray(values, dtype=float).ravel())
    a = np.asarray(candidates, dtype=float)
    below = np.searchsorted(values, a, side="right")
    above = len(values) - np.searchsorted(values, a, side="left")
    return np.minimum(below, above)


def required_sample_size(n: int, w: float, budget: PrivacyBudget, beta: float,
                         solver: ExponentialMechanism = BASELINE) -> int:
    """Smallest m for which the promise (m - n)/2 meets the selection minimum
    over at most 4w candidates."""
    size = max(2, math.ceil(4 * w))
    need = max(solver.min_promise(size, 0.5, budget, beta),
               BASELINE.min_promise(size, 0.5, budget, beta))
    return n + math.ceil(2 * need)


def edge_points(center: float, radius: float, w: float, domain: GridDomain) -> np.ndarray:
    """Edge points of the cut of [c - R, c + R] into pieces of length R/w.

    Each edge point is snapped to the grid towards c (so it stays inside the
    interval) and clipped to [0, 1]; duplicates are removed.
    """
    pieces = max(1, math.ceil(2 * w))
    edges = center - radius + (2 * radius / pieces) * np.arange(pieces + 1)
    scale = domain.levels - 1
    idx = np.where(edges >= center, np.floor(edges * scale), np.ceil(edges * scale))
    snapped = np.clip(idx / scale, 0.0, 1.0)
    return np.unique(snapped)


def int_point(values, n: int, t: int, beta: float, budget: PrivacyBudget,
              rng: np.random.Generator, domain: GridDomain,
              constants: CenterConstants = PAPER_CONSTANTS,
              solver: ExponentialMechanism = BASELINE, gamma_scale: float = 1.0,
              w: float | None = None) -> IntPointResult:
    """Privately return a value between min(values) and max(values).

    The 1-cluster step and the final selection each spend ``budget``; the
    ledger totals ``(2 eps, 2 delta)``. ``w`` is the solver's declared
    approximation factor (by default the facade's ``4 * capture * sqrt(k)``).
    Raises :class:`InvalidParameter` naming the required m when the sample is
    too small for the selection promise.
    """
    if domain.d != 1:
        raise InvalidParameter("int_point works on a one-dimensional grid")
    values = domain.validate(np.asarray(values, dtype=float).reshape(-1, 1))[:, 0]
    m = len(values)
    if not (1 <= t <= n <= m):
        raise InvalidParameter(f"need 1 <= t <= n <= m (t={t}, n={n}, m={m})")
    w = approximation_factor(n, beta, constants) if w is None else w
    needed = required_sample_size(n, w, budget, beta, solver)
    if m < needed:
        paper_m = required_sample_size(n, w, budget, beta, RECCONCAVE)
        raise InvalidParameter(
            f"m={m} too small: the {solver.name} selection needs m >= {needed} "
            f"(the recursive solver bound needs m >= {paper_m})")

    middle = middle_entries(values, n)
    cluster = solve_one_cluster(middle[:, None], t, beta, budget, rng, domain,
                                constants=constants, gamma_scale=gamma_scale)
    c, r = float(cluster.center[0]), float(cluster.radius)
    select = LedgerEntry(f"int_point.quasiconcave[{solver.name}]", budget)
    if r == 0:
        return IntPointResult(c, c, r, np.array([c]), cluster.ledger + [select], cluster,
                              {"zero_radius": True})

    candidates = edge_points(c, r, w, domain)
    quality = interior_quality(values, candidates)
    problem = QualityProblem(len(candidates), lambda _: quality, promise=(m - n) / 2, alpha=0.5)
    index = quasiconcave_solve(problem, values, budget, beta, rng, solver=solver)
    return IntPointResult(float(candidates[index]), c, r, candidates,
                          cluster.ledger + [select], cluster, {"zero_radius": False})
