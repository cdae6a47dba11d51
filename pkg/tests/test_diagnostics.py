"""Diagnostics: autocovariance, IAT, rate estimates, scaling fits, escapes."""

import math

import numpy as np
import pytest

from gibbslab.diagnostics import (
    DiagnosticsReport,
    autocovariance,
    diagnostics_report,
    escape_time,
    ess,
    fraction_missing_info,
    gamma_hat,
    iat,
    lag1_correlation,
    mixing_time,
    scaling_fit,
)
from gibbslab.engine import SamplerConfig, run_chain
from gibbslab.errors import (
    InsufficientGridError,
    InsufficientLengthError,
    InvalidParameterError,
    OracleUnavailableError,
    OutOfRangeError,
)
from gibbslab.models.location import RepeatedMeasurementsModel
from gibbslab.reparam import CENTERED, NONCENTERED
from gibbslab.rng import RngStream

from oracles import ar1_series


def test_autocovariance_matches_direct_sums():
    rng = RngStream(31, 0)
    x = rng.standard_normal(400)
    got = autocovariance(x, 6)
    xc = x - x.mean()
    for lag in range(7):
        want = float(np.dot(xc[: 400 - lag], xc[lag:])) / 400
        assert got[lag] == pytest.approx(want, abs=1e-12)


def test_autocovariance_rejects_bad_lags():
    x = np.arange(50.0)
    with pytest.raises(InvalidParameterError):
        autocovariance(x, 0)
    with pytest.raises(InsufficientLengthError):
        autocovariance(x, 50)


@pytest.mark.parametrize("rho", [0.5, 0.9, 0.99])
def test_iat_tracks_ar1_theory(rho):
    # Theory: IAT of AR(1) is (1 + rho) / (1 - rho).
    rng = RngStream(7, int(rho * 100))
    n = 400_000 if rho > 0.95 else 100_000
    x = ar1_series(rho, n, rng)
    want = (1 + rho) / (1 - rho)
    assert iat(x) == pytest.approx(want, rel=0.15)


def test_iat_of_iid_noise_is_near_one():
    x = RngStream(3, 0).standard_normal(50_000)
    assert iat(x) == pytest.approx(1.0, abs=0.05)


def test_iat_never_below_one_and_needs_length():
    assert iat(np.zeros(2000)) == 1.0
    with pytest.raises(InsufficientLengthError):
        iat(np.zeros(999))


def test_ess_is_length_over_iat():
    x = ar1_series(0.8, 20_000, RngStream(9, 0))
    assert ess(x) == pytest.approx(20_000 / iat(x))


def test_lag1_correlation_basics():
    x = np.tile([1.0, -1.0], 2000)
    assert lag1_correlation(x) == pytest.approx(-1.0, abs=1e-3)
    assert lag1_correlation(np.full(100, 2.5)) == 0.0
    with pytest.raises(InsufficientLengthError):
        lag1_correlation([1.0])


def test_gamma_hat_searches_functionals():
    # Flip signs at random: the identity decorrelates but the square keeps
    # the AR(1) memory, so the functional search must find the larger rate.
    rng = RngStream(11, 4)
    base = np.abs(ar1_series(0.9, 60_000, rng))
    signs = np.where(rng.open_unit(60_000) < 0.5, -1.0, 1.0)
    x = signs * base
    ident = gamma_hat(x)
    with_sq = gamma_hat(x, {"sq": lambda v: v * v})
    assert ident < 0.1
    assert with_sq > 0.5


def test_gamma_hat_clips_into_unit_interval():
    assert gamma_hat(np.arange(5000.0)) < 1.0
    assert gamma_hat(RngStream(1, 1).standard_normal(5000)) >= 0.0


def test_fraction_missing_info_from_pair():
    theta = np.array([0.0, 2.0, 4.0, 6.0])
    cond = np.full(4, 2.5)
    marginal = theta.var()
    want = 1.0 - 2.5 / marginal
    assert fraction_missing_info((theta, cond)) == pytest.approx(want)
    # conditional variance above the marginal clips to zero, not negative
    assert fraction_missing_info((theta, np.full(4, 99.0))) == 0.0
    assert fraction_missing_info((theta, np.zeros(4))) == 1.0
    assert fraction_missing_info((np.zeros(10), np.ones(10))) == 0.0
    with pytest.raises(InsufficientLengthError):
        fraction_missing_info((np.array([1.0]), np.array([1.0])))


def test_fraction_missing_info_matches_analytic_rate():
    # For the one-level normal model the fraction of missing information
    # equals the maximal correlation of the centered scheme.
    m = RepeatedMeasurementsModel.synthesize(n=10, theta_star=0.0, data_seed=5)
    cfg = SamplerConfig(iterations=20_000, burn_in=1000, seed=17)
    tr = run_chain(m, cfg)
    assert fraction_missing_info(tr) == pytest.approx(m.gamma_centered(), abs=0.05)


def test_fraction_missing_info_requires_recorded_variances():
    m = RepeatedMeasurementsModel.synthesize(n=5, theta_star=0.0, data_seed=5)
    cfg = SamplerConfig(
        iterations=50, seed=1, record_conditional_variance=False
    )
    tr = run_chain(m, cfg)
    with pytest.raises(OracleUnavailableError):
        fraction_missing_info(tr)


def test_mixing_time_at_published_rate():
    t = mixing_time(0.99)
    assert t == pytest.approx(99.50, abs=0.01)
    assert abs(t - 1.0 / (1.0 - 0.99)) / (1.0 / (1.0 - 0.99)) < 0.01


def test_mixing_time_sentinel_and_range():
    assert mixing_time(1.0) == math.inf
    assert mixing_time(1.0 - 1e-13) == math.inf
    with pytest.raises(OutOfRangeError):
        mixing_time(1.0 + 1e-6)
    with pytest.raises(OutOfRangeError):
        mixing_time(0.0)
    with pytest.raises(OutOfRangeError):
        mixing_time(-0.3)


def test_scaling_fit_recovers_exact_line():
    grid = [(n, 0.5 * n**1.2) for n in (10, 100, 1000, 10_000)]
    fit = scaling_fit(grid)
    assert fit.slope == pytest.approx(1.2, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.5), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_scaling_fit_input_guards():
    with pytest.raises(InsufficientGridError):
        scaling_fit([(10, 2.0), (100, 3.0)])
    with pytest.raises(InsufficientGridError):
        scaling_fit([(10, 2.0), (10, 2.5), (100, 3.0)])
    with pytest.raises(InvalidParameterError):
        scaling_fit([(0, 2.0), (10, 3.0), (100, 4.0)])
    with pytest.raises(InvalidParameterError):
        scaling_fit([(10, 0.5), (100, 3.0), (1000, 4.0)])


def test_escape_time_reaches_data_center():
    m = RepeatedMeasurementsModel.synthesize(n=10, theta_star=0.0, data_seed=2)
    out = escape_time(
        m, CENTERED, theta0=50.0, radius=5.0, max_iters=500,
        replicates=31, rng=RngStream(13, 0),
    )
    assert len(out.times) == 31
    assert out.censored == 0
    assert 1 <= out.median < 500
    assert all(t >= 1 for t in out.times)


def test_escape_time_zero_when_started_inside():
    m = RepeatedMeasurementsModel.synthesize(n=10, theta_star=0.0, data_seed=2)
    out = escape_time(
        m, NONCENTERED, theta0=m.data_center(), radius=5.0, max_iters=50,
        replicates=31, rng=RngStream(13, 1),
    )
    assert out.median == 0.0
    assert set(out.times) == {0}


def test_escape_time_reproducible_via_substreams():
    m = RepeatedMeasurementsModel.synthesize(n=6, theta_star=0.0, data_seed=4)
    a = escape_time(m, CENTERED, 30.0, 5.0, 200, 31, RngStream(8, 0))
    b = escape_time(m, CENTERED, 30.0, 5.0, 200, 31, RngStream(8, 0))
    assert a.times == b.times


def test_escape_time_input_guards():
    m = RepeatedMeasurementsModel.synthesize(n=4, theta_star=0.0, data_seed=3)
    rng = RngStream(1, 0)
    with pytest.raises(InvalidParameterError):
        escape_time(m, CENTERED, 10.0, 1.0, 10, replicates=30, rng=rng)
    with pytest.raises(InvalidParameterError):
        escape_time(m, CENTERED, 10.0, 1.0, 10, replicates=21, rng=rng)
    with pytest.raises(InvalidParameterError):
        escape_time(m, CENTERED, 10.0, -1.0, 10, replicates=31, rng=rng)
    with pytest.raises(InvalidParameterError):
        escape_time(m, CENTERED, 10.0, 1.0, 0, replicates=31, rng=rng)


def test_diagnostics_report_bundles_consistent_fields():
    x = ar1_series(0.7, 30_000, RngStream(21, 0))
    rep = diagnostics_report(x, {"sq": lambda v: v * v})
    assert isinstance(rep, DiagnosticsReport)
    assert rep.sample_count == 30_000
    assert rep.iat == pytest.approx(iat(x))
    assert rep.ess == pytest.approx(30_000 / rep.iat)
    assert rep.lag1 == pytest.approx(lag1_correlation(x))
    assert rep.gamma_hat >= rep.per_functional["sq"] - 1e-12
    assert rep.tau_hat == pytest.approx(mixing_time(rep.gamma_hat))
    # only the supplied functionals are searched; the square of an AR(1)
    # with rate 0.7 has lag-1 correlation 0.49
    assert rep.gamma_hat == pytest.approx(0.49, abs=0.05)
