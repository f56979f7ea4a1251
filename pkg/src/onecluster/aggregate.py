"""Sample and aggregate: privatize an analysis by privately clustering its
outputs on disjoint fragments of a resampled database."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .center import PAPER_CONSTANTS, CenterConstants
from .cluster import ClusterResult, solve_one_cluster
from .exceptions import InvalidParameter
from .geometry import GridDomain
from .privacy import LedgerEntry, PrivacyBudget, amplify_by_subsampling
from .selection import BASELINE, ExponentialMechanism


@dataclass
class AnalysisFunction:
    """A non-private analysis mapping a database fragment to a point of ``domain``.

    Outputs are snapped to the grid (nearest level, ties to the lower level).
    An output outside the unit cube is an error rather than being clipped.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    domain: GridDomain
    name: str = "custom"

    def __call__(self, fragment) -> np.ndarray:
        out = np.atleast_1d(np.asarray(self.evaluate(fragment), dtype=float)).ravel()
        if out.shape != (self.domain.d,):
            raise InvalidParameter(
                f"analysis {self.name!r} returned shape {out.shape}, expected ({self.domain.d},)")
        if not np.all(np.isfinite(out)) or np.any(out < -1e-9) or np.any(out > 1 + 1e-9):
            raise InvalidParameter(f"analysis {self.name!r} left the unit cube: {out}")
        return self.domain.snap(out)


def mean_analysis(domain: GridDomain) -> AnalysisFunction:
    return AnalysisFunction(lambda rows: np.mean(rows, axis=0), domain, "mean")


def median_analysis(domain: GridDomain) -> AnalysisFunction:
    return AnalysisFunction(lambda rows: np.median(rows, axis=0), domain, "median")


@dataclass
class StabilityEstimate:
    point: np.ndarray
    radius: float
    alpha_hat: float
    trials: int
    successes: int = 0

    def as_dict(self) -> dict:
        return {"point": [float(v) for v in self.point], "radius": self.radius,
                "alpha_hat": self.alpha_hat, "trials": self.trials}


@dataclass
class SAResult:
    point: np.ndarray
    outer_budget: PrivacyBudget
    inner_budget: PrivacyBudget
    k: int
    t: int
    cluster: ClusterResult
    ledger: list[LedgerEntry] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"point": [float(v) for v in self.point], "k": self.k, "t": self.t,
                "outer_budget": self.outer_budget.as_dict(),
                "inner_budget": self.inner_budget.as_dict(),
                "cluster": self.cluster.as_dict()}


def _evaluate_all(f: AnalysisFunction, fragments, workers: int) -> np.ndarray:
    if workers <= 1:
        return np.array([f(frag) for frag in fragments])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(f, fragments)))


def draw_fragments(n: int, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of ``k * m`` draws with replacement, and each draw's fragment.

    ``k = n // (9 m)``. Draw ``i`` belongs to fragment ``i // m``, so fragment
    membership depends on draw order only.
    """
    k = n // (9 * m)
    if k < 1:
        raise InvalidParameter(f"need n >= 9m for at least one fragment (n={n}, m={m})")
    rows = rng.integers(0, n, size=k * m)
    return rows, np.arange(k * m) // m


def sample_aggregate(data, f: AnalysisFunction, m: int, alpha: float, beta: float,
                     budget: PrivacyBudget, rng: np.random.Generator,
                     constants: CenterConstants = PAPER_CONSTANTS,
                     solver: ExponentialMechanism = BASELINE, gamma_scale: float = 1.0,
                     enforce_generalization: bool = True, workers: int = 1) -> SAResult:
    """Run ``f`` on ``k = n // (9m)`` fragments of size m and privately cluster the outputs.

    ``budget`` is the inner budget spent by the 1-cluster solver on the k
    outputs; ``outer_budget`` in the result is the amplified guarantee with
    respect to the original n rows. With ``enforce_generalization`` the
    inner budget must satisfy ``eps <= alpha / 72`` and ``delta <= beta eps / 3``,
    the regime in which the stability conclusion is proved.
    """
    data = np.asarray(data)
    n = len(data)
    if m < 1:
        raise InvalidParameter("fragment size m must be positive")
    if n < 18 * m:
        raise InvalidParameter(f"need n >= 18m (n={n}, m={m})")
    if not (0 < alpha <= 1):
        raise InvalidParameter("alpha must lie in (0, 1]")
    if enforce_generalization and (budget.epsilon > alpha / 72
                                   or budget.delta > beta * budget.epsilon / 3):
        raise InvalidParameter(
            f"inner budget must satisfy eps <= alpha/72 = {alpha / 72:.4g} "
            f"and delta <= beta*eps/3 = {beta * budget.epsilon / 3:.4g}")

    rows, fragment_of = draw_fragments(n, m, rng)
    k = int(fragment_of[-1]) + 1
    fragments = [data[rows[j * m:(j + 1) * m]] for j in range(k)]
    outputs = _evaluate_all(f, fragments, workers)
    t = math.ceil(alpha * k / 2)
    result = solve_one_cluster(outputs, t, beta, budget, rng, f.domain, constants=constants,
                               solver=solver, gamma_scale=gamma_scale)
    outer = amplify_by_subsampling(budget, k * m, n)
    return SAResult(point=result.center, outer_budget=outer, inner_budget=budget, k=k, t=t,
                    cluster=result, ledger=result.ledger)


def estimate_stability(data, f: AnalysisFunction, m: int, candidate, radius: float,
                       trials: int, rng: np.random.Generator) -> StabilityEstimate:
    """Fraction of fresh m-row subsamples (with replacement) whose analysis
    output lies within ``radius`` of ``candidate``."""
    if trials < 1:
        raise InvalidParameter("trials must be positive")
    data = np.asarray(data)
    candidate = np.asarray(candidate, dtype=float)
    hits = 0
    for _ in range(trials):
        out = f(data[rng.integers(0, len(data), size=m)])
        hits += bool(np.linalg.norm(out - candidate) <= radius)
    return StabilityEstimate(candidate, radius, hits / trials, trials, hits)
