"""Experiment plumbing: oracles, planted instances, a statistical DP check,
CSV/JSON I/O and a seeded trial runner."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import binomtest

from .exceptions import CSVFormatError, InvalidParameter
from .geometry import _CHUNK, GridDomain, as_points, ball_count, kth_smallest_distances
from .privacy import PrivacyBudget, as_generator, split_rng

SCHEMA = "onecluster/1"


# -- oracle -----------------------------------------------------------------


@dataclass
class OracleResult:
    radius_2approx: float
    best_center_index: int
    exact_count: int

    def as_dict(self) -> dict:
        return {"radius_2approx": self.radius_2approx,
                "best_center_index": self.best_center_index,
                "exact_count": self.exact_count}


def oracle_2approx(points, t: int) -> OracleResult:
    """Smallest ball centred at an input point holding t points.

    Its radius lies in ``[r_opt, 2 r_opt]``. Ties go to the lowest index.
    """
    points = as_points(points)
    radii = kth_smallest_distances(points, t)
    best = int(np.argmin(radii))
    r = float(radii[best])
    return OracleResult(r, best, ball_count(points, points[best], r))


def best_ball_count(points, r: float) -> int:
    """Largest number of points in a radius-r ball centred at an input point."""
    points = as_points(points)
    best = 0
    for start in range(0, len(points), _CHUNK):
        block = cdist(points[start:start + _CHUNK], points) <= r
        best = max(best, int(block.sum(axis=1).max()))
    return best


# -- planted instances ------------------------------------------------------


@dataclass
class PlantedInstance:
    points: np.ndarray
    center: np.ndarray
    cluster_radius: float
    in_cluster: np.ndarray
    domain: GridDomain

    @property
    def t(self) -> int:
        return int(self.in_cluster.sum())


def _uniform_ball(count: int, d: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    direction = rng.standard_normal((count, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * (radius * rng.random(count) ** (1.0 / d))[:, None]


def generate_planted(domain: GridDomain, n: int, t: int, cluster_radius: float,
                     rng: np.random.Generator) -> PlantedInstance:
    """t grid points uniform in a ball plus n - t uniform grid points, shuffled."""
    if not (1 <= t <= n):
        raise InvalidParameter(f"need 1 <= t <= n (t={t}, n={n})")
    if cluster_radius != 0 and cluster_radius < domain.step:
        raise InvalidParameter("cluster_radius must be 0 or at least one grid step")
    if 2 * cluster_radius > 1:
        raise InvalidParameter("cluster ball does not fit in the unit cube")
    d = domain.d
    while True:
        center = domain.snap(rng.uniform(cluster_radius, 1 - cluster_radius, size=d))
        if np.all(center - cluster_radius >= 0) and np.all(center + cluster_radius <= 1):
            break
    cluster = domain.snap(center + _uniform_ball(t, d, cluster_radius, rng))
    noise = rng.integers(0, domain.levels, size=(n - t, d)) / (domain.levels - 1)
    points = np.vstack([cluster, noise])
    labels = np.arange(n) < t
    order = rng.permutation(n)
    return PlantedInstance(points[order], center, cluster_radius, labels[order], domain)


# -- statistical DP check ---------------------------------------------------


@dataclass
class DPTestReport:
    passed: bool
    worst_ratio: float
    worst_bin: Any
    bins: int
    samples: int
    claimed: PrivacyBudget
    violations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "worst_ratio": self.worst_ratio,
                "worst_bin": str(self.worst_bin), "bins": self.bins,
                "samples": self.samples, "claimed": self.claimed.as_dict(),
                "violations": [str(v) for v in self.violations]}


def _is_numeric(values: Sequence) -> bool:
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError):
        return False
    return arr.ndim == 1 and bool(np.all(np.isfinite(arr)))


def _discretize(out1: list, out2: list, max_bins: int):
    pooled = out1 + out2
    distinct = set(map(repr, pooled))
    if len(distinct) <= max_bins or not _is_numeric(pooled):
        if len(distinct) > max_bins:
            raise InvalidParameter(f"{len(distinct)} distinct outputs exceed {max_bins} bins")
        keys = sorted(distinct)
        index = {k: i for i, k in enumerate(keys)}
        return (np.array([index[repr(v)] for v in out1]),
                np.array([index[repr(v)] for v in out2]), keys)
    qs = np.quantile(np.asarray(pooled, dtype=float), np.linspace(0, 1, max_bins + 1)[1:-1])
    edges = np.unique(qs)
    labels = [f"<= {edges[0]:.4g}"] + [f"({a:.4g}, {b:.4g}]" for a, b in zip(edges, edges[1:])] \
        + [f"> {edges[-1]:.4g}"]
    return (np.searchsorted(edges, np.asarray(out1, float), side="left"),
            np.searchsorted(edges, np.asarray(out2, float), side="left"), labels)


def dp_frequency_test(mechanism: Callable[[Any, np.random.Generator], Any], db_pair,
                      budget: PrivacyBudget, samples: int, rng: np.random.Generator,
                      bins: int = 20, z: float = 3.0) -> DPTestReport:
    """Empirical check of ``P[M(S) in B] <= e^eps P[M(S') in B] + delta`` per bin.

    Outputs are binned by category when there are at most ``bins`` distinct
    values and by pooled quantiles otherwise. Each bin is checked in both
    directions with ``z`` standard errors of slack. Needs ``samples >= 100 * bins``
    when binning numerically.

    For a mechanism that meets its claim with equality (Laplace tails do)
    every bin is tight, so each one fails with probability about 0.1% at
    z = 3 and the chance of some false alarm grows with the bin count; 20
    quantile bins keep it small while still catching a doubled epsilon.
    """
    if not (1 <= bins <= 100):
        raise InvalidParameter("bins must lie in [1, 100]")
    s1, s2 = db_pair
    out1 = [mechanism(s1, rng) for _ in range(samples)]
    out2 = [mechanism(s2, rng) for _ in range(samples)]
    if len(set(map(repr, out1 + out2))) > bins and samples < 100 * bins:
        raise InvalidParameter(
            f"{samples} samples are too few for {bins} bins; need at least {100 * bins}")
    b1, b2, labels = _discretize(out1, out2, bins)
    nb = len(labels)
    p1 = np.bincount(b1, minlength=nb) / samples
    p2 = np.bincount(b2, minlength=nb) / samples
    e = math.exp(budget.epsilon)
    violations, worst, worst_bin = [], 1.0, labels[0]
    for a, b, name in ((p1, p2, "S"), (p2, p1, "S'")):
        se = np.sqrt(a * (1 - a) / samples + e * e * b * (1 - b) / samples)
        bad = a > e * b + budget.delta + z * se
        violations += [(name, labels[i]) for i in np.flatnonzero(bad)]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(b > 0, a / b, np.where(a > 0, np.inf, 1.0))
        i = int(np.argmax(ratio))
        if ratio[i] > worst:
            worst, worst_bin = float(ratio[i]), labels[i]
    return DPTestReport(not violations, worst, worst_bin, nb, samples, budget, violations)


# -- I/O --------------------------------------------------------------------


def _parse_float(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def ingest_csv(path, domain: GridDomain | None = None, snap: bool = False) -> np.ndarray:
    """Read one point per row; an all-text first row is taken as a header.

    Coordinates must lie in [0, 1]. With a domain the points must lie on its
    grid, or are rounded to it when ``snap`` is set.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            values = [_parse_float(c) for c in row]
            if line == 1 and all(v is None for v in values):
                continue
            for col, v in enumerate(values):
                if v is None:
                    raise CSVFormatError(f"column {col + 1} is not a number: {row[col]!r}", line)
                if not (0.0 <= v <= 1.0):
                    raise CSVFormatError(f"column {col + 1} value {v} outside [0, 1]", line)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise CSVFormatError(f"expected {width} columns, found {len(values)}", line)
            rows.append(values)
    if not rows:
        raise CSVFormatError("no data rows")
    points = np.array(rows, dtype=float)
    if domain is not None:
        if points.shape[1] != domain.d:
            raise CSVFormatError(f"expected {domain.d} columns, found {points.shape[1]}")
        if snap:
            points = domain.snap(points)
        elif not domain.contains(points):
            raise CSVFormatError("points are not on the grid (pass snap=True to round them)")
    return points


def write_csv(points, path, header: Sequence[str] | None = None) -> None:
    points = as_points(points)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(header)
        writer.writerows([repr(float(v)) for v in row] for row in points)


def _jsonable(obj):
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit_json(result, path=None, timestamp: bool = True, **meta) -> str:
    """Versioned JSON document; only ``generated_at`` varies between identical runs."""
    doc = {"schema": SCHEMA, **meta,
           "result": result.as_dict() if hasattr(result, "as_dict") else result}
    if timestamp:
        doc["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    text = json.dumps(doc, default=_jsonable, sort_keys=True, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


# -- trial runner -----------------------------------------------------------


@dataclass
class ExperimentSpec:
    algorithm: str
    params: dict
    trials: int
    seed: int
    generator: dict | None = None
    input_path: str | None = None
    multipliers: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameter("trials must be positive")
        if (self.generator is None) == (self.input_path is None):
            raise InvalidParameter("give exactly one of generator or input_path")


@dataclass
class TrialSummary:
    successes: int
    trials: int
    ci_low: float
    ci_high: float
    outcomes: list = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def as_dict(self) -> dict:
        return {"successes": self.successes, "trials": self.trials, "rate": self.rate,
                "wilson_95": [self.ci_low, self.ci_high], "outcomes": self.outcomes}


def thread_cap(default: int | None = None) -> int:
    raw = os.environ.get("ONECLUSTER_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidParameter(f"ONECLUSTER_THREADS must be an integer, got {raw!r}")
    return default or os.cpu_count() or 1


def run_trials(trial: Callable[[np.random.Generator], Any], trials: int, seed,
               threads: int | None = None,
               success: Callable[[Any], bool] = bool) -> TrialSummary:
    """Run ``trial`` on independent child generators and summarise successes.

    Outcomes are returned in trial order whatever the thread count, so a
    (seed, trials) pair always produces the same summary.
    """
    if trials < 1:
        raise InvalidParameter("trials must be positive")
    rngs = split_rng(as_generator(seed), trials)
    workers = min(thread_cap(threads), trials)
    if workers == 1:
        outcomes = [trial(r) for r in rngs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(trial, rngs))
    hits = sum(1 for o in outcomes if success(o))
    ci = binomtest(hits, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return TrialSummary(hits, trials, float(ci.low), float(ci.high), outcomes)
