"""Bandit laboratory: UCB policies over oracle quantities.

Classical UCB, MaxSearch (expected improvement) and PIUCB (probability of
improvement) policies, failure counting against a per-round oracle-best arm,
synthetic max-bandit benchmarks and a grammar-based MCTS molecule search.
"""

from .core import (ArmSpec, OracleKind, PullRecord, SufficientStats, best_arm,
                   count_failures, oracle_value, sample_reward)
from .experiments import (PROBLEMS, ProblemSpec, RunSummary, aggregate,
                          fit_loglinear, run_episode, run_many)
from .policies import (PIUCB, ClassicalUCB, MaxSearchGaussian, UniformRandom,
                       parse_policy, select_arm)

__version__ = "0.1.0"

__all__ = [
    "ArmSpec", "OracleKind", "PullRecord", "SufficientStats", "best_arm",
    "count_failures", "oracle_value", "sample_reward", "PROBLEMS",
    "ProblemSpec", "RunSummary", "aggregate", "fit_loglinear", "run_episode", "run_many", "PIUCB",
    "ClassicalUCB", "MaxSearchGaussian", "UniformRandom", "parse_policy",
    "select_arm",
]
