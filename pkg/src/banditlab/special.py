"""Special functions and quantiles used by the selection indices.

``erfc`` and the distribution inverses delegate to :mod:`scipy.special`;
``ierfc`` is evaluated here because its closed form cancels badly in the
right tail.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sc
from scipy import stats

__all__ = [
    "erfc",
    "ierfc",
    "student_t_quantile",
    "student_t_upper",
    "chi_square_quantile",
    "bootstrap_percentile_ci",
]

SQRT_PI = math.sqrt(math.pi)

# Switch point between the direct closed form and the Laplace continued fraction.
_CF_SWITCH = 2.0
_CF_TERMS = 80


def _as_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def erfc(x):
    """Complementary error function, ``2/sqrt(pi) * int_x^inf exp(-u^2) du``."""
    return _unwrap(sc.erfc(_as_finite(x)))


def _ierfc_tail(x):
    # exp(-x^2)/sqrt(pi) * a/(x + a), where a is the tail of the Laplace
    # continued fraction of sqrt(pi) exp(x^2) erfc(x); no cancellation.
    f = np.zeros_like(x)
    for k in range(_CF_TERMS, 0, -1):
        f = (0.5 * k) / (x + f)
    return np.exp(-x * x) * f / (SQRT_PI * (x + f))


def ierfc_unchecked(x):
    """Vectorised ``ierfc`` without the finiteness check (hot path)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    tail = x >= _CF_SWITCH
    head = ~tail
    xh = x[head]
    out[head] = np.exp(-xh * xh) / SQRT_PI - xh * sc.erfc(xh)
    if tail.any():
        out[tail] = _ierfc_tail(x[tail])
    return out


def ierfc(x):
    """Integral of ``erfc`` from ``x`` to infinity.

    Equals ``exp(-x**2)/sqrt(pi) - x*erfc(x)``. For ``x >= 2`` a continued
    fraction is used so the result stays positive and keeps full relative
    precision deep in the tail.
    """
    return _unwrap(ierfc_unchecked(_as_finite(x)))


def _check_level(level, df):
    level = np.asarray(level, dtype=float)
    df = np.asarray(df, dtype=float)
    if not np.all((level > 0.0) & (level < 1.0)):
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    if not np.all(df >= 1):
        raise ValueError(f"degrees of freedom must be >= 1, got {df!r}")
    return level, df


def student_t_quantile(level, df):
    """Quantile of Student's t distribution with ``df`` degrees of freedom."""
    level, df = _check_level(level, df)
    # Invert the smaller tail (1 - level is exact for level >= 0.5) and
    # reflect, so the quantile is exactly antisymmetric about 0.5.
    tail = np.minimum(level, 1.0 - level)
    q = np.where(level < 0.5, 1.0, -1.0) * sc.stdtrit(df, tail)
    return _unwrap(np.where(level == 0.5, 0.0, q))


def student_t_upper(tail, df):
    """Quantile at ``1 - tail``, evaluated from the tail probability itself.

    Forming ``1 - tail`` first would round away most of a tiny ``tail``.
    """
    return -sc.stdtrit(df, tail)


def chi_square_quantile(level, df):
    """Quantile of the chi-square distribution with ``df`` degrees of freedom."""
    level, df = _check_level(level, df)
    return _unwrap(np.asarray(2.0 * sc.gammaincinv(0.5 * df, level)))


def chi_square_lower(level, df):
    return 2.0 * sc.gammaincinv(0.5 * df, level)


def bootstrap_percentile_ci(samples, statistic=np.median, resamples=1000,
                            confidence=0.95, seed=0):
    """Percentile bootstrap interval ``(lo, hi)`` of ``statistic``.

    ``statistic`` must accept an ``axis`` keyword (``np.median`` does).
    """
    data = np.asarray(samples, dtype=float)
    if data.size == 0:
        raise ValueError("bootstrap needs at least one sample")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if data.size == 1 or np.all(data == data[0]):
        value = float(statistic(data))
        return value, value
    res = stats.bootstrap(
        (data,),
        statistic,
        n_resamples=resamples,
        confidence_level=confidence,
        method="percentile",
        vectorized=True,
        random_state=np.random.default_rng(seed),
    )
    return float(res.confidence_interval.low), float(res.confidence_interval.high)
