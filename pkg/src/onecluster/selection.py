"""Private selection: stability-based cell choice, AboveThreshold, and a
quasi-concave promise-problem solver with pluggable strategies."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .exceptions import InvalidParameter, SessionClosed
from .privacy import LedgerEntry, PrivacyBudget, sample_laplace

#: Returned by :func:`stable_choice` when no cell survives the noisy threshold.
NO_HEAVY_CELL = None

TOP = True
BOTTOM = False


def log_star(x: float) -> int:
    """Iterated base-2 logarithm: the least j with tower(j) >= x."""
    if not (x >= 1):
        raise InvalidParameter(f"log_star needs x >= 1, got {x}")
    j, level = 0, 1
    while level < x:
        level = 2**level
        j += 1
    return j


def tower(j: int) -> int:
    value = 1
    for _ in range(j):
        value = 2**value
    return value


# -- stability-based choice -------------------------------------------------


def stable_choice_threshold(budget: PrivacyBudget, beta: float, n: int) -> float:
    return (2.0 / budget.epsilon) * math.log(4.0 * n / (beta * budget.delta))


def stable_choice(labels: Sequence[Hashable], budget: PrivacyBudget, beta: float,
                  rng: np.random.Generator, n: int | None = None):
    """Privately pick a heavily populated cell of a partition.

    ``labels`` holds the cell identifier of every database element (the
    partition already applied). Each occupied cell gets ``Lap(2/eps)`` noise on
    its count; cells below ``(2/eps) ln(4n/(beta delta))`` are dropped and the
    noisy argmax of the survivors is returned, ties to the smallest label.
    Empty cells are never considered, so an unoccupied cell is never returned.

    ``n`` is the public bound on the database size used in the threshold
    (defaults to ``len(labels)``). Returns :data:`NO_HEAVY_CELL` when nothing
    survives.
    """
    if not (budget.delta > 0):
        raise InvalidParameter("stable_choice needs delta > 0")
    if not (0 < beta < 1):
        raise InvalidParameter("beta must lie in (0, 1)")
    labels = list(labels)
    if not labels:
        raise InvalidParameter("stable_choice needs a nonempty database")
    n = len(labels) if n is None else n
    counts = Counter(labels)
    cells = sorted(counts)
    noisy = np.array([counts[c] for c in cells], dtype=float)
    noisy += sample_laplace(2.0 / budget.epsilon, rng, size=len(cells))
    threshold = stable_choice_threshold(budget, beta, n)
    survivors = np.flatnonzero(noisy >= threshold)
    if survivors.size == 0:
        return NO_HEAVY_CELL
    best = survivors[np.argmax(noisy[survivors])]
    return cells[best]


# -- sparse vector ----------------------------------------------------------


class AboveThreshold:
    """Sparse-vector session answering sensitivity-1 queries against a threshold.

    The threshold is perturbed once with ``Lap(2/eps)``; each query value gets
    fresh ``Lap(4/eps)`` noise. The first query whose noisy value reaches the
    noisy threshold is answered :data:`TOP` and the session halts. The whole
    session costs a single ``(eps, 0)`` ledger entry.
    """

    def __init__(self, threshold: float, budget: PrivacyBudget, rng: np.random.Generator):
        if budget.delta != 0:
            raise InvalidParameter("AboveThreshold is pure: budget.delta must be 0")
        self.budget = budget
        self.query_scale = 4.0 / budget.epsilon
        self._rng = rng
        self._noisy_threshold = threshold + sample_laplace(2.0 / budget.epsilon, rng)
        self.halted = False
        self.queries_answered = 0

    def query(self, value: float) -> bool:
        if self.halted:
            raise SessionClosed("AboveThreshold session already answered TOP")
        self.queries_answered += 1
        if value + sample_laplace(self.query_scale, self._rng) >= self._noisy_threshold:
            self.halted = True
            return TOP
        return BOTTOM

    def ledger_entry(self, name: str = "above_threshold") -> LedgerEntry:
        return LedgerEntry(name, self.budget)


def above_threshold_accuracy(budget: PrivacyBudget, k: int, beta: float) -> float:
    """Error bound (8/eps) log2(2k/beta) holding over k queries w.p. 1 - beta."""
    return (8.0 / budget.epsilon) * math.log2(2.0 * k / beta)


# -- quasi-concave promise problems ----------------------------------------


@dataclass
class QualityProblem:
    """Selection over the ordered solutions ``0 .. size-1``.

    ``quality(db)`` must return the quality of every solution as an array of
    length ``size``; it has to have sensitivity 1 in ``db``.
    """

    size: int
    quality: Callable[[object], np.ndarray]
    promise: float
    alpha: float = 0.5
    decode: Callable[[int], object] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise InvalidParameter("a quality problem needs at least one solution")
        if not (0 < self.alpha < 1):
            raise InvalidParameter("alpha must lie in (0, 1)")


class ExponentialMechanism:
    """Baseline strategy: exponential mechanism over all solutions.

    Picks index f with probability proportional to ``exp(eps Q(S, f) / 2)``.
    Pure (eps, 0)-DP; its utility guarantee holds once the promise reaches
    ``(2 / (alpha eps)) ln(|F| / beta)``.
    """

    name = "baseline"

    def min_promise(self, size: int, alpha: float, budget: PrivacyBudget, beta: float) -> float:
        return (2.0 / (alpha * budget.epsilon)) * math.log(size / beta)

    def select(self, scores: np.ndarray, budget: PrivacyBudget, rng: np.random.Generator) -> int:
        scores = np.asarray(scores, dtype=float)
        logits = 0.5 * budget.epsilon * (scores - scores.max())
        weights = np.exp(logits)
        cdf = np.cumsum(weights)
        u = rng.random() * cdf[-1]
        return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))


class RecConcaveBound(ExponentialMechanism):
    """Advertises the recursive solver's promise bound
    ``8^{log*|F|} (36 log*|F| / (alpha eps)) log2(12 log*|F| / (beta delta))``.

    Selection runs the exponential mechanism, whose guarantee holds a fortiori
    whenever this (much larger) promise is met for any enumerable |F|.
    """

    name = "recconcave"

    def min_promise(self, size: int, alpha: float, budget: PrivacyBudget, beta: float) -> float:
        if not (budget.delta > 0):
            raise InvalidParameter("the recursive solver bound needs delta > 0")
        ls = max(log_star(size), 1)
        return (8.0**ls) * (36.0 * ls / (alpha * budget.epsilon)) * math.log2(
            12.0 * ls / (beta * budget.delta))


BASELINE = ExponentialMechanism()
RECCONCAVE = RecConcaveBound()


def quasiconcave_solve(problem: QualityProblem, db, budget: PrivacyBudget, beta: float,
                       rng: np.random.Generator, solver: ExponentialMechanism = BASELINE,
                       strict: bool = True) -> int:
    """Privately choose a solution index for a quasi-concave promise problem.

    If ``Q(db, .)`` is quasi-concave and its maximum is at least the promise,
    the returned index has quality >= ``(1 - alpha) * promise`` w.p. >= 1 - beta.
    With ``strict`` a promise below the strategy's minimum is rejected.
    """
    if strict:
        needed = solver.min_promise(problem.size, problem.alpha, budget, beta)
        # The recursive bound is selected by the exponential mechanism, so its
        # promise must also cover the baseline requirement.
        needed = max(needed, BASELINE.min_promise(problem.size, problem.alpha, budget, beta))
        if problem.promise < needed:
            raise InvalidParameter(
                f"promise {problem.promise:.4g} below the {solver.name} minimum {needed:.4g}")
    if problem.size == 1:
        return 0
    scores = np.asarray(problem.quality(db), dtype=float)
    if scores.shape != (problem.size,):
        raise InvalidParameter(f"quality returned shape {scores.shape}, expected ({problem.size},)")
    return solver.select(scores, budget, rng)
