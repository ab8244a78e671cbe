"""Gaussian arms, oracle quantities, running statistics and failure counting.

Arm indices are 0-based throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special as sc

from .special import ierfc_unchecked

__all__ = [
    "ArmSpec",
    "OracleKind",
    "SufficientStats",
    "PullRecord",
    "sample_reward",
    "oracle_value",
    "oracle_values",
    "best_arm",
    "best_arms",
    "count_failures",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ArmSpec:
    """Hidden parameters of a Gaussian reward distribution."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")


class OracleKind(enum.Enum):
    """Quantity whose per-round argmax defines the optimal arm."""

    MEAN = "mean"
    EXPECTED_IMPROVEMENT = "ei"
    PROBABILITY_OF_IMPROVEMENT = "pi"

    @classmethod
    def parse(cls, text: str) -> "OracleKind":
        key = text.strip().lower()
        aliases = {
            "mean": cls.MEAN,
            "ei": cls.EXPECTED_IMPROVEMENT,
            "expectedimprovement": cls.EXPECTED_IMPROVEMENT,
            "expected_improvement": cls.EXPECTED_IMPROVEMENT,
            "pi": cls.PROBABILITY_OF_IMPROVEMENT,
            "probabilityofimprovement": cls.PROBABILITY_OF_IMPROVEMENT,
            "probability_of_improvement": cls.PROBABILITY_OF_IMPROVEMENT,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown oracle kind {text!r}; expected mean, ei or pi") from None


def sample_reward(arm: ArmSpec, rng: np.random.Generator) -> float:
    return float(rng.normal(arm.mu, arm.sigma))


def oracle_value(kind: OracleKind, arm: ArmSpec, r_max: float) -> float:
    """Oracle quantity of one arm given the running maximum reward.

    Before any reward has been seen (``r_max = -inf``) the improvement-based
    quantities are +inf and 1 respectively.
    """
    if kind is OracleKind.MEAN:
        return arm.mu
    if r_max == -math.inf:
        return math.inf if kind is OracleKind.EXPECTED_IMPROVEMENT else 1.0
    zeta = (r_max - arm.mu) / (SQRT2 * arm.sigma)
    if kind is OracleKind.EXPECTED_IMPROVEMENT:
        return float(arm.sigma * ierfc_unchecked(zeta) / SQRT2)
    return 0.5 * math.erfc(zeta)


def oracle_values(kind: OracleKind, mu, sigma, r_max):
    """Vectorised oracle quantity; ``r_max`` broadcasts against ``mu``/``sigma``.

    Returns the actual probability for PI. :func:`best_arms` ranks by the
    order-preserving ``(mu - r_max)/sigma`` instead.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    r_max = np.asarray(r_max, dtype=float)
    if kind is OracleKind.MEAN:
        return np.broadcast_to(mu, np.broadcast_shapes(mu.shape, sigma.shape, r_max.shape)).copy()
    with np.errstate(invalid="ignore"):
        zeta = (r_max - mu) / (SQRT2 * sigma)
    zeta, sigma = np.broadcast_arrays(zeta, sigma)
    unseen = np.isneginf(zeta)
    out = np.empty(zeta.shape)
    if kind is OracleKind.EXPECTED_IMPROVEMENT:
        out[unseen] = np.inf
        out[~unseen] = sigma[~unseen] * ierfc_unchecked(zeta[~unseen]) / SQRT2
    else:
        out[unseen] = 1.0
        out[~unseen] = 0.5 * sc.erfc(zeta[~unseen])
    return out


def best_arms(kind: OracleKind, mu, sigma, r_max):
    """Per-row index of the oracle-best arm.

    ``mu`` and ``sigma`` have shape ``(K,)``; ``r_max`` has shape ``(R,)``.
    Ties resolve to the lowest index. With ``r_max = -inf`` the limiting
    ordering is used: largest mean for EI, smallest spread for PI.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    r_max = np.atleast_1d(np.asarray(r_max, dtype=float))
    if mu.size == 0:
        raise ValueError("at least one arm is required")
    if kind is OracleKind.MEAN:
        return np.full(r_max.shape, int(np.argmax(mu)))
    rm = r_max[:, None]
    unseen = np.isneginf(r_max)
    if kind is OracleKind.EXPECTED_IMPROVEMENT:
        scores = oracle_values(kind, mu, sigma, np.where(unseen, 0.0, r_max)[:, None])
        limit = np.broadcast_to(mu, scores.shape)
    else:
        # argmax erfc(zeta)/2 == argmax -zeta; the reduced form never underflows.
        scores = (mu - np.where(np.isneginf(rm), 0.0, rm)) / sigma
        limit = np.broadcast_to(-sigma, scores.shape)
    scores = np.where(unseen[:, None], limit, scores)
    return np.argmax(scores, axis=1)


def best_arm(kind: OracleKind, arms: Sequence[ArmSpec], r_max: float) -> int:
    if not arms:
        raise ValueError("best_arm needs at least one arm")
    mu = [a.mu for a in arms]
    sigma = [a.sigma for a in arms]
    return int(best_arms(kind, mu, sigma, [r_max])[0])


class SufficientStats:
    """Per-arm counts, means and unbiased variances for a batch of runs.

    Arrays have shape ``(n_runs, n_arms)``; every run in the batch is at the
    same round ``t`` (the round about to be played), so ``count.sum(1) == t-1``.
    Means and variances are maintained with Welford's recurrence.
    """

    def __init__(self, n_arms: int, n_runs: int = 1):
        if n_arms < 1 or n_runs < 1:
            raise ValueError("need at least one arm and one run")
        self.count = np.zeros((n_runs, n_arms), dtype=np.int64)
        self.mean = np.zeros((n_runs, n_arms))
        self.m2 = np.zeros((n_runs, n_arms))
        self.r_max = np.full(n_runs, -np.inf)
        self.t = 1
        self._rows = np.arange(n_runs)

    @property
    def n_runs(self) -> int:
        return self.count.shape[0]

    @property
    def n_arms(self) -> int:
        return self.count.shape[1]

    @property
    def variance(self):
        """Unbiased sample variance; NaN where fewer than two observations."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.count >= 2, self.m2 / (self.count - 1), np.nan)

    def observe(self, arm, reward) -> "SufficientStats":
        """Record one reward per run (``arm``/``reward`` broadcast to ``(n_runs,)``)."""
        arm = np.broadcast_to(np.asarray(arm, dtype=np.int64), (self.n_runs,))
        reward = np.broadcast_to(np.asarray(reward, dtype=float), (self.n_runs,))
        rows = self._rows
        n = self.count[rows, arm] + 1
        old = self.mean[rows, arm]
        delta = reward - old
        new = old + delta / n
        self.count[rows, arm] = n
        self.mean[rows, arm] = new
        self.m2[rows, arm] += delta * (reward - new)
        np.maximum(self.r_max, reward, out=self.r_max)
        self.t += 1
        return self

    def copy(self) -> "SufficientStats":
        other = SufficientStats.__new__(SufficientStats)
        other.count = self.count.copy()
        other.mean = self.mean.copy()
        other.m2 = self.m2.copy()
        other.r_max = self.r_max.copy()
        other.t = self.t
        other._rows = self._rows
        return other

    @classmethod
    def from_rewards(cls, rewards_per_arm: Sequence[Iterable[float]]) -> "SufficientStats":
        """Single-run statistics from explicit per-arm reward lists."""
        stats = cls(len(rewards_per_arm))
        for k, rewards in enumerate(rewards_per_arm):
            for r in rewards:
                stats.observe(k, r)
        return stats


@dataclass(frozen=True)
class PullRecord:
    round: int
    arm: int
    reward: float
    oracle_best: int

    @property
    def failure(self) -> bool:
        return self.arm != self.oracle_best


def count_failures(history: Sequence[PullRecord]) -> list[int]:
    """Cumulative number of failures after each record."""
    out = []
    total = 0
    last = None
    for rec in history:
        if last is not None and rec.round <= last:
            raise ValueError(f"records out of round order at round {rec.round} (after {last})")
        last = rec.round
        total += rec.failure
        out.append(total)
    return out
