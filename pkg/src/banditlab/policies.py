"""Selection indices and the generalized UCB arm choice.

Every index function works on a whole :class:`~banditlab.core.SufficientStats`
batch and returns an ``(n_runs, n_arms)`` array; arms that still need
exploration come back as ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SQRT2, SufficientStats
from .special import chi_square_lower, ierfc_unchecked, student_t_upper

__all__ = [
    "ClassicalUCB",
    "MaxSearchGaussian",
    "PIUCB",
    "UniformRandom",
    "IndexReport",
    "alpha_schedule",
    "classical_ucb_index",
    "confidence_bounds_gaussian",
    "piucb_index",
    "maxsearch_index",
    "select_arm",
    "choose_arms",
    "argmax_random_tie",
    "parse_policy",
]

ALPHA_FLOOR = 1e-12
ALPHA_CEIL = 0.5


def alpha_schedule(t, c):
    """Significance level ``t**(-c**2/2)`` clamped to ``[1e-12, 0.5]``."""
    return np.clip(np.power(float(t), -0.5 * c * c), ALPHA_FLOOR, ALPHA_CEIL)


def classical_ucb_index(stats: SufficientStats, c: float = SQRT2):
    """``mean + c*sqrt(ln t / N)``; unpulled arms get ``+inf``."""
    n = stats.count
    with np.errstate(divide="ignore", invalid="ignore"):
        bonus = c * np.sqrt(math.log(stats.t) / n)
        return np.where(n >= 1, stats.mean + bonus, np.inf)


def confidence_bounds_gaussian(stats: SufficientStats, c_mu: float, c_sigma: float):
    """Upper confidence bounds ``(mu_plus, sigma_plus)`` of mean and spread.

    The mean bound uses the Student-t quantile at ``1 - alpha_mu/2`` and the
    variance bound the lower ``alpha_sigma/2`` chi-square quantile, both with
    ``N-1`` degrees of freedom. Arms with fewer than two pulls give NaN.
    """
    n = stats.count
    ok = n >= 2
    df = np.where(ok, n - 1, 1).astype(float)
    a_mu = alpha_schedule(stats.t, c_mu)
    a_sigma = alpha_schedule(stats.t, c_sigma)
    var = np.where(ok, stats.m2 / df, np.nan)
    sd = np.sqrt(var)
    mu_plus = stats.mean + sd * student_t_upper(0.5 * a_mu, df) / np.sqrt(np.maximum(n, 1))
    sigma_plus = np.sqrt(df * var / chi_square_lower(0.5 * a_sigma, df))
    return mu_plus, sigma_plus


def _r_max_column(stats, r_max):
    rm = stats.r_max if r_max is None else np.broadcast_to(np.asarray(r_max, float), (stats.n_runs,))
    return rm[:, None]


def piucb_index(stats: SufficientStats, c_mu: float, c_sigma: float, r_max=None):
    """Reduced probability-of-improvement UCB, ``(mu_plus - r_max)/sigma_plus``.

    A degenerate spread (all rewards equal) maps to ``+inf`` when the mean
    bound beats ``r_max`` and ``-inf`` otherwise.
    """
    mu_p, sd_p = confidence_bounds_gaussian(stats, c_mu, c_sigma)
    gap = mu_p - _r_max_column(stats, r_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = gap / sd_p
    z = np.where(sd_p > 0, z, np.where(gap > 0, np.inf, -np.inf))
    return np.where(stats.count >= 2, z, np.inf)


def maxsearch_index(stats: SufficientStats, c_mu: float, c_sigma: float, r_max=None):
    """Expected-improvement UCB, ``sigma_plus*ierfc((r_max-mu_plus)/(sqrt2*sigma_plus))/sqrt2``."""
    mu_p, sd_p = confidence_bounds_gaussian(stats, c_mu, c_sigma)
    rm = _r_max_column(stats, r_max)
    gap = mu_p - rm
    out = np.maximum(gap, 0.0)
    live = (sd_p > 0) & np.isfinite(gap)
    if live.any():
        s = sd_p[live]
        out[live] = s * ierfc_unchecked(-gap[live] / (SQRT2 * s)) / SQRT2
    # Before any reward r_max is -inf and every improvement is unbounded.
    out = np.where(np.isneginf(rm), np.inf, out)
    return np.where(stats.count >= 2, out, np.inf)


@dataclass(frozen=True)
class ClassicalUCB:
    c: float = SQRT2
    init_pulls: int = 2

    def indices(self, stats, r_max=None):
        return classical_ucb_index(stats, self.c)

    @property
    def name(self):
        return f"ucb:{self.c:g}"


@dataclass(frozen=True)
class MaxSearchGaussian:
    c_mu: float = SQRT2
    c_sigma: float = SQRT2
    init_pulls: int = 2

    def __post_init__(self):
        _check_gaussian_policy(self)

    def indices(self, stats, r_max=None):
        return maxsearch_index(stats, self.c_mu, self.c_sigma, r_max)

    @property
    def name(self):
        return f"maxsearch:{self.c_mu:g},{self.c_sigma:g}"


@dataclass(frozen=True)
class PIUCB:
    c_mu: float = SQRT2
    c_sigma: float = SQRT2
    init_pulls: int = 2

    def __post_init__(self):
        _check_gaussian_policy(self)

    def indices(self, stats, r_max=None):
        return piucb_index(stats, self.c_mu, self.c_sigma, r_max)

    @property
    def name(self):
        return f"piucb:{self.c_mu:g},{self.c_sigma:g}"


@dataclass(frozen=True)
class UniformRandom:
    """Baseline: every arm gets the same index, so the tie rule picks uniformly."""

    init_pulls: int = 0

    def indices(self, stats, r_max=None):
        return np.zeros(stats.count.shape)

    @property
    def name(self):
        return "random"


def _check_gaussian_policy(policy):
    if not (policy.c_mu > 0 and policy.c_sigma > 0):
        raise ValueError("c_mu and c_sigma must be positive")
    if policy.init_pulls < 2:
        raise ValueError("variance-based indices need init_pulls >= 2")


def argmax_random_tie(values, u):
    """Row-wise argmax; exact ties resolved by the uniform draws ``u`` in [0, 1)."""
    values = np.where(np.isnan(values), -np.inf, values)
    best = values.max(axis=1, keepdims=True)
    mask = values == best
    n_tied = mask.sum(axis=1)
    pick = np.minimum((np.asarray(u) * n_tied).astype(np.int64), n_tied - 1)
    chosen = np.argmax(np.cumsum(mask, axis=1) > pick[:, None], axis=1)
    return chosen, n_tied > 1


@dataclass
class IndexReport:
    values: np.ndarray
    chosen: np.ndarray
    tie_broken: np.ndarray


def choose_arms(policy, stats: SufficientStats, u) -> IndexReport:
    """Arm choice per run given pre-drawn uniforms ``u`` (shape ``(n_runs,)``).

    Runs with an arm below ``policy.init_pulls`` pull the least-pulled such
    arm (lowest index on ties), so initialisation cycles through the arms;
    the others take the argmax of the policy index.
    """
    under = stats.count < policy.init_pulls
    warm = under.any(axis=1)
    values = policy.indices(stats)
    chosen, tied = argmax_random_tie(values, u)
    if warm.any():
        values = np.where(under, np.inf, values)
        first = np.argmin(np.where(under, stats.count, np.iinfo(np.int64).max), axis=1)
        chosen = np.where(warm, first, chosen)
        tied = tied & ~warm
    return IndexReport(values, chosen, tied)


def select_arm(policy, stats: SufficientStats, rng: np.random.Generator) -> IndexReport:
    return choose_arms(policy, stats, rng.random(stats.n_runs))


_NAMED = {
    "piucb1": PIUCB(SQRT2, SQRT2),
    "piucb2": PIUCB(0.5, SQRT2),
    "random": UniformRandom(),
}


def parse_policy(text: str):
    """Build a policy from ``ucb[:c]``, ``maxsearch[:c_mu,c_sigma]``,
    ``piucb:c_mu,c_sigma``, ``piucb1``, ``piucb2`` or ``random``."""
    key, _, args = text.strip().lower().partition(":")
    if key in _NAMED and not args:
        return _NAMED[key]
    try:
        params = [float(a) for a in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"bad policy parameters in {text!r}") from None
    if key == "ucb" and len(params) <= 1:
        c = params[0] if params else SQRT2
        if not c >= 0:
            raise ValueError(f"ucb constant must be non-negative, got {c}")
        return ClassicalUCB(c)
    if key in ("maxsearch", "piucb") and len(params) in (0, 2):
        cls = MaxSearchGaussian if key == "maxsearch" else PIUCB
        return cls(*params)
    raise ValueError(
        f"unknown policy {text!r}; expected ucb[:c], maxsearch[:c_mu,c_sigma], "
        "piucb:c_mu,c_sigma, piucb1, piucb2 or random"
    )
