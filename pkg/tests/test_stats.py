import math

import numpy as np
import pytest
from scipy import stats as sps

from gibbslab.errors import EmptyInputError, InvalidParameterError, LengthMismatchError
from gibbslab.stats import chi_square_counts, ks_critical_value, ks_statistic, two_sample_ks


def test_ks_statistic_known_small_case():
    # gaps at the jumps: max(F(x_1) - 0, 1 - F(x_3)) = 0.25 exactly
    stat = ks_statistic([0.25, 0.5, 0.75], lambda t: np.asarray(t))
    assert stat == pytest.approx(0.25, abs=1e-15)


def test_ks_statistic_matches_scipy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=500)
    ours = ks_statistic(x, lambda t: sps.norm.cdf(t))
    ref = sps.kstest(x, "norm").statistic
    assert abs(ours - ref) < 1e-12


def test_ks_statistic_handles_scalar_cdf():
    x = [0.1, 0.6, 0.9]
    stat = ks_statistic(x, lambda t: float(np.clip(t, 0, 1)) if np.ndim(t) == 0 else np.clip(t, 0, 1))
    assert 0.0 <= stat <= 1.0


def test_ks_statistic_empty_input():
    with pytest.raises(EmptyInputError):
        ks_statistic([], lambda t: t)


def test_two_sample_ks_agrees_with_scipy():
    rng = np.random.default_rng(1)
    a = rng.normal(size=300)
    b = rng.normal(0.5, size=400)
    stat, p = two_sample_ks(a, b)
    ref = sps.ks_2samp(a, b, method="asymp")
    assert abs(stat - ref.statistic) < 1e-12
    assert abs(p - ref.pvalue) < 1e-12
    with pytest.raises(EmptyInputError):
        two_sample_ks([], [1.0])


def test_ks_critical_value_closed_form():
    # sqrt(-0.5 ln(alpha/2)) / sqrt(n); the alpha=0.05 constant is 1.358
    assert abs(ks_critical_value(100, 0.05) - 1.3581015157406195 / 10.0) < 1e-12
    assert ks_critical_value(400, 0.05) == pytest.approx(ks_critical_value(100, 0.05) / 2.0)
    with pytest.raises(InvalidParameterError):
        ks_critical_value(0, 0.05)
    with pytest.raises(InvalidParameterError):
        ks_critical_value(10, 1.5)


def test_ks_critical_value_calibration():
    # under the null the statistic should exceed the threshold about alpha often
    rng = np.random.default_rng(2)
    n, trials, alpha = 200, 400, 0.1
    crit = ks_critical_value(n, alpha)
    hits = sum(
        ks_statistic(rng.uniform(size=n), lambda t: np.asarray(t)) > crit
        for _ in range(trials)
    )
    # binomial(400, 0.1): mean 40, sd ~6
    assert 10 <= hits <= 75


def test_chi_square_counts_exact_value():
    stat = chi_square_counts([10, 20, 30], [15, 15, 30])
    assert stat == pytest.approx(25.0 / 15.0 + 25.0 / 15.0)


def test_chi_square_counts_validation():
    with pytest.raises(EmptyInputError):
        chi_square_counts([], [])
    with pytest.raises(LengthMismatchError):
        chi_square_counts([1.0, 2.0], [1.0])
    with pytest.raises(InvalidParameterError):
        chi_square_counts([1.0], [0.0])


def test_chi_square_counts_null_distribution():
    # multinomial draws against their own expectation: statistic ~ chi2(k-1)
    rng = np.random.default_rng(3)
    k, n, trials = 6, 600, 300
    p = np.full(k, 1.0 / k)
    stats = [
        chi_square_counts(rng.multinomial(n, p), n * p) for _ in range(trials)
    ]
    assert abs(np.mean(stats) - (k - 1)) < 1.0
    assert max(stats) < sps.chi2.ppf(1.0 - 1e-6, k - 1)
