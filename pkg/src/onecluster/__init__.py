"""Differentially private location of a small cluster.

The package is layered: ``privacy`` (noise and budget arithmetic),
``selection`` (stable choice, AboveThreshold, quasi-concave selection),
``geometry`` (grid model, ball counts, random maps), the two search stages
``radius`` and ``center``, the ``cluster`` facade, and the ``aggregate`` and
``intpoint`` applications. ``harness`` holds oracles and experiment plumbing.
"""

from .aggregate import (AnalysisFunction, SAResult, StabilityEstimate, estimate_stability,
                        mean_analysis, median_analysis, sample_aggregate)
from .center import (PAPER_CONSTANTS, PRACTICAL_CONSTANTS, CenterConstants, CenterResult,
                     good_center, noisy_avg)
from .cluster import ClusterResult, approximation_factor, solve_one_cluster
from .exceptions import (CSVFormatError, EmptyCluster, InvalidParameter, SearchFailed,
                         SessionClosed)
from .geometry import GridDomain, ball_count, score_L, score_L_many
from .harness import (OracleResult, dp_frequency_test, emit_json, generate_planted,
                      ingest_csv, oracle_2approx, run_trials)
from .intpoint import int_point, interior_quality, middle_entries
from .privacy import (CompositionRule, LedgerEntry, Norm, PrivacyBudget, Sensitivity,
                      amplify_by_subsampling, as_generator, compose_advanced, compose_basic,
                      gaussian_mechanism, gaussian_sigma, laplace_mechanism, ledger_total,
                      sample_gaussian, sample_laplace)
from .radius import RadiusResult, good_radius, radius_quality
from .selection import (BASELINE, NO_HEAVY_CELL, RECCONCAVE, AboveThreshold, QualityProblem,
                        quasiconcave_solve, stable_choice)

__version__ = "0.1.0"

__all__ = [
    "AnalysisFunction", "SAResult", "StabilityEstimate", "estimate_stability", "mean_analysis",
    "median_analysis", "sample_aggregate", "PAPER_CONSTANTS", "PRACTICAL_CONSTANTS",
    "CenterConstants", "CenterResult", "good_center", "noisy_avg", "ClusterResult",
    "approximation_factor", "solve_one_cluster", "CSVFormatError", "EmptyCluster",
    "InvalidParameter", "SearchFailed", "SessionClosed", "GridDomain", "ball_count", "score_L",
    "score_L_many", "OracleResult", "dp_frequency_test", "emit_json", "generate_planted",
    "ingest_csv", "oracle_2approx", "run_trials", "int_point", "interior_quality",
    "middle_entries", "CompositionRule", "LedgerEntry", "Norm", "PrivacyBudget", "Sensitivity",
    "amplify_by_subsampling", "as_generator", "compose_advanced", "compose_basic",
    "gaussian_mechanism", "gaussian_sigma", "laplace_mechanism", "ledger_total",
    "sample_gaussian", "sample_laplace", "RadiusResult", "good_radius", "radius_quality",
    "BASELINE", "NO_HEAVY_CELL", "RECCONCAVE", "AboveThreshold", "QualityProblem",
    "quasiconcave_solve", "stable_choice",
]
