"""Private location of a cluster center given a radius, and the NoisyAVG mechanism."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .exceptions import EmptyCluster, InvalidParameter, SearchFailed
from .geometry import (BoxPartition, as_points, jl_dimension, jl_matrix, max_cell_count,
                       random_orthonormal_basis)
from .privacy import (CompositionRule, LedgerEntry, PrivacyBudget, compose_advanced,
                      sample_gaussian, sample_laplace)
from .selection import NO_HEAVY_CELL, AboveThreshold, stable_choice


@dataclass(frozen=True)
class CenterConstants:
    """Numeric constants of the center search.

    Defaults reproduce the published analysis. Each constant multiplies the
    quantity named in its comment (r is the input radius, k the JL dimension,
    ``lg = ln(d n / beta)``):

    * ``box``: side of the shifted boxes in the projected space (``box * r``).
    * ``interval``: rotated-axis interval length ``interval * r * sqrt(k lg / d)``.
    * ``ball``: radius of the clipping ball ``ball * r * sqrt(k lg)``.
    * ``capture``: advertised capture radius ``capture * r * sqrt(k)``.
    * ``jl``: projection dimension ``ceil(jl * log2(2n / beta))``.
    * ``threshold``: AboveThreshold offset ``(threshold / eps) * log2(2n / beta)``.
    * ``loss``: advertised count loss ``(loss / eps) * log2(2n / beta)``.

    ``axis_composition`` selects how the d rotated-axis choices share their
    ``(eps/4, delta/4)``: ``"advanced"`` gives each
    ``(eps / (10 sqrt(d ln(8/delta))), delta / (8 d))``; ``"basic"`` gives each
    ``(eps / (4 d), delta / (4 d))``.
    """

    box: float = 300.0
    interval: float = 900.0
    ball: float = 2700.0
    capture: float = 451.0
    jl: float = 46.0
    threshold: float = 100.0
    loss: float = 216.0
    axis_composition: str = "advanced"
    max_rounds: int = 100_000

    def __post_init__(self):
        for name in ("box", "interval", "ball", "capture", "jl"):
            if not (getattr(self, name) > 0):
                raise InvalidParameter(f"constant {name} must be positive")
        if self.threshold < 0 or self.loss < 0:
            raise InvalidParameter("threshold and loss constants must be nonnegative")
        if self.axis_composition not in ("advanced", "basic"):
            raise InvalidParameter("axis_composition must be 'advanced' or 'basic'")
        if self.max_rounds < 1:
            raise InvalidParameter("max_rounds must be positive")

    @classmethod
    def scaled(cls, factor: float, **overrides) -> "CenterConstants":
        """All seven numeric constants multiplied by one factor."""
        base = cls()
        scaled = {name: getattr(base, name) * factor
                  for name in ("box", "interval", "ball", "capture", "jl", "threshold", "loss")}
        scaled.update(overrides)
        return cls(**scaled)

    def with_(self, **changes) -> "CenterConstants":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


PAPER_CONSTANTS = CenterConstants()

# Desk-scale constants tuned by simulation on n ~ 10^3..10^4 planted
# instances. They keep the structure of the algorithm but none of its
# worst-case guarantees; see the README for how they were chosen.
PRACTICAL_CONSTANTS = CenterConstants(box=50.0, interval=40.0, ball=21.0, capture=30.0,
                                      jl=4.6, threshold=10.0, loss=36.0,
                                      axis_composition="basic")


@dataclass
class CenterResult:
    center: np.ndarray
    capture_radius: float
    k: int
    ledger: list[LedgerEntry]
    advertised_loss: float
    rounds_used: int
    box_size: int = 0
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "center": [float(c) for c in self.center],
            "capture_radius": self.capture_radius,
            "k": self.k,
            "advertised_loss": self.advertised_loss,
            "rounds_used": self.rounds_used,
            "ledger": [e.as_dict() for e in self.ledger],
        }


# -- NoisyAVG ---------------------------------------------------------------


def member_mean(vectors, predicate: Callable[[np.ndarray], np.ndarray]):
    """Mean of the vectors selected by ``predicate`` (None when there are none)."""
    vectors = as_points(vectors)
    members = vectors[np.asarray(predicate(vectors), dtype=bool)]
    if len(members) == 0:
        return None
    return members.mean(axis=0)


def noisy_avg(vectors, predicate: Callable[[np.ndarray], np.ndarray], bound: float,
              budget: PrivacyBudget, rng: np.random.Generator, center=None):
    """Gaussian-noised average of the member vectors, or None (bottom).

    Every member ``v`` must satisfy ``||v - center|| <= bound`` (``center``
    defaults to the origin). The noisy count is
    ``m + Lap(2/eps) - (2/eps) ln(2/delta)``; when it is not positive the
    result is None. Otherwise the member mean gets per-coordinate
    ``N(0, sigma^2)`` with ``sigma = 8 bound / (eps m_hat) * sqrt(2 ln(8/delta))``.
    """
    if not (budget.delta > 0):
        raise InvalidParameter("NoisyAVG needs delta > 0")
    if not (bound > 0) or not math.isfinite(bound):
        raise InvalidParameter("NoisyAVG needs a finite positive bound")
    vectors = as_points(vectors)
    d = vectors.shape[1]
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    mask = np.asarray(predicate(vectors), dtype=bool) if len(vectors) else np.zeros(0, bool)
    members = vectors[mask] - center
    eps, delta = budget.epsilon, budget.delta
    m_hat = len(members) + sample_laplace(2.0 / eps, rng) - (2.0 / eps) * math.log(2.0 / delta)
    if m_hat <= 0:
        return None
    sigma = 8.0 * bound / (eps * m_hat) * math.sqrt(2.0 * math.log(8.0 / delta))
    return members.mean(axis=0) + center + sample_gaussian(sigma, rng, size=d)


def noisy_avg_sigma(m_hat: float, bound: float, budget: PrivacyBudget) -> float:
    return 8.0 * bound / (budget.epsilon * m_hat) * math.sqrt(2.0 * math.log(8.0 / budget.delta))


# -- GoodCenter -------------------------------------------------------------


def _axis_budget(budget: PrivacyBudget, d: int, rule: str) -> PrivacyBudget:
    eps, delta = budget.epsilon, budget.delta
    if rule == "basic":
        return PrivacyBudget(eps / (4 * d), delta / (4 * d))
    return PrivacyBudget(eps / (10 * math.sqrt(d * math.log(8.0 / delta))), delta / (8 * d))


def round_limit(n: int, beta: float, constants: CenterConstants) -> int:
    literal = math.ceil(2 * n * math.log2(1.0 / beta) / beta)
    return max(1, min(literal, constants.max_rounds))


def good_center(points, r: float, t: int, beta: float, budget: PrivacyBudget,
                rng: np.random.Generator,
                constants: CenterConstants = PAPER_CONSTANTS) -> CenterResult:
    """Privately locate a center whose capture ball holds about t points.

    Assumes some ball of radius ``r`` contains at least ``t`` points. Steps:
    JL projection; AboveThreshold over randomly shifted box partitions of the
    projected space; stable choice of the heavy box; random rotation and
    per-axis stable choice of heavy intervals; NoisyAVG of the points inside
    the resulting clipping ball. Budget is split into four ``eps/4`` parts;
    the NoisyAVG step also receives the ``delta/4`` left unused by
    AboveThreshold so the ledger totals exactly ``(eps, delta)``.

    Raises :class:`SearchFailed` (carrying the ledger) when no box is found and
    :class:`EmptyCluster` when NoisyAVG returns bottom.
    """
    points = as_points(points)
    n, d = points.shape
    if not (r > 0):
        raise InvalidParameter("good_center needs a positive radius")
    if not (1 <= t <= n):
        raise InvalidParameter(f"need 1 <= t <= n (t={t}, n={n})")
    if not (budget.delta > 0):
        raise InvalidParameter("good_center needs delta > 0")
    if not (0 < beta < 1):
        raise InvalidParameter("beta must lie in (0, 1)")

    eps, delta = budget.epsilon, budget.delta
    c = constants
    log_term = math.log2(2.0 * n / beta)
    ln_term = math.log(d * n / beta)
    k = jl_dimension(n, beta, c.jl)
    capture_radius = c.capture * r * math.sqrt(k)
    advertised_loss = (c.loss / eps) * log_term

    at_budget = PrivacyBudget(eps / 4, 0.0)
    box_budget = PrivacyBudget(eps / 4, delta / 4)
    axes_budget = PrivacyBudget(eps / 4, delta / 4)
    avg_budget = PrivacyBudget(eps / 4, delta / 2)
    axis_rule = CompositionRule.ADVANCED if c.axis_composition == "advanced" else CompositionRule.BASIC
    per_axis = _axis_budget(budget, d, c.axis_composition)
    if axis_rule is CompositionRule.ADVANCED:
        composed = compose_advanced(d, per_axis, delta / 8)
        if composed.epsilon > axes_budget.epsilon:
            raise InvalidParameter("advanced axis split exceeds eps/4 at this epsilon; "
                                   "use axis_composition='basic'")
    ledger = [LedgerEntry("good_center.above_threshold", at_budget),
              LedgerEntry("good_center.box_choice", box_budget),
              LedgerEntry(f"good_center.axis_choices[d={d}]", axes_budget, axis_rule),
              LedgerEntry("good_center.noisy_avg", avg_budget)]

    # Step 1: JL projection.
    projected = points @ jl_matrix(d, k, rng).T

    # Steps 2-6: search for a heavy box with AboveThreshold.
    session = AboveThreshold(t - (c.threshold / eps) * log_term, at_budget, rng)
    side = c.box * r
    limit = round_limit(n, beta, c)
    cells = None
    for _ in range(limit):
        partition = BoxPartition.random(k, side, rng)
        cells = partition.cells(projected)
        if session.query(max_cell_count(cells)):
            break
    else:
        raise SearchFailed(f"no heavy box after {limit} rounds", ledger, limit)
    rounds = session.queries_answered

    # Step 7: stable choice of the box; D = preimage of the box.
    _, box_ids = np.unique(cells, axis=0, return_inverse=True)
    box_ids = box_ids.ravel()
    chosen = stable_choice(box_ids.tolist(), box_budget, beta, rng, n=n)
    if chosen is NO_HEAVY_CELL:
        raise SearchFailed("stable choice found no heavy box", ledger, rounds)
    cluster = points[box_ids == chosen]

    # Steps 8-9: random rotation, heavy interval per rotated axis.
    basis = random_orthonormal_basis(d, rng)
    p = c.interval * r * math.sqrt(k * ln_term / d)
    rotated = cluster @ basis.T
    interval_index = np.empty(d)
    for i in range(d):
        labels = np.floor(rotated[:, i] / p).astype(np.int64)
        pick = stable_choice(labels.tolist(), per_axis, beta, rng, n=n)
        if pick is NO_HEAVY_CELL:
            raise SearchFailed(f"no heavy interval on rotated axis {i}", ledger, rounds)
        interval_index[i] = pick

    # Step 10: the extended box has center ((j + 1/2) p) along each z_i.
    box_center = ((interval_index + 0.5) * p) @ basis
    ball_radius = c.ball * r * math.sqrt(k * ln_term)

    def inside(v):
        return np.linalg.norm(v - box_center, axis=1) <= ball_radius

    # Step 11: NoisyAVG over D' = D intersected with the ball.
    estimate = noisy_avg(cluster, inside, ball_radius, avg_budget, rng, center=box_center)
    if estimate is None:
        raise EmptyCluster("NoisyAVG returned bottom", ledger, rounds)
    return CenterResult(
        center=estimate, capture_radius=capture_radius, k=k, ledger=ledger,
        advertised_loss=advertised_loss, rounds_used=rounds, box_size=len(cluster),
        details={"box_side": side, "interval_length": p, "ball_radius": ball_radius,
                 "ball_center": box_center, "round_limit": limit,
                 "members": int(np.count_nonzero(inside(cluster)))})
