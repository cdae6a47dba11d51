"""Small goodness-of-fit helpers used by tests and the validation command."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _sps

from .errors import EmptyInputError, InvalidParameterError, LengthMismatchError

__all__ = [
    "ks_statistic",
    "two_sample_ks",
    "ks_critical_value",
    "chi_square_counts",
]


def ks_statistic(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a CDF callable.

    ``sup_x |F_n(x) - F(x)|`` computed at the sample points, which is where
    the supremum of the empirical process is attained.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise EmptyInputError("ks_statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    if f.shape != x.shape:
        f = np.array([cdf(v) for v in x], dtype=float)
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))


def two_sample_ks(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptyInputError("two_sample_ks needs nonempty samples")
    res = _sps.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_critical_value(n: int, alpha: float) -> float:
    """One-sample KS rejection threshold at level ``alpha`` (asymptotic)."""
    if n <= 0 or not (0 < alpha < 1):
        raise InvalidParameterError("need n > 0 and alpha in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def chi_square_counts(observed: Sequence[float], expected: Sequence[float]) -> float:
    """Pearson chi-square statistic: sum (obs - exp)^2 / exp.

    Expected counts must be strictly positive; callers pool sparse bins
    before getting here.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.size == 0:
        raise EmptyInputError("chi_square_counts needs at least one bin")
    if obs.shape != exp.shape:
        raise LengthMismatchError(
            f"observed and expected lengths differ: {obs.shape} vs {exp.shape}"
        )
    if np.any(exp <= 0):
        raise InvalidParameterError("expected counts must be positive")
    return float(np.sum((obs - exp) ** 2 / exp))
