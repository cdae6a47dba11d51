"""Model-specific behaviour of the scalar and truncation-driven test models."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from gibbslab.engine import SamplerConfig, run_chain
from gibbslab.errors import (
    DegenerateSupportError,
    EmptyIntervalError,
    InvalidParameterError,
    InvalidScenarioError,
)
from gibbslab.models import MODEL_REGISTRY, get_model
from gibbslab.models.chains import GaussianHmmModel
from gibbslab.models.classification import ClassificationMixtureModel
from gibbslab.models.heavy_tail import HeavyTailHmmModel, figure_surface
from gibbslab.models.location import RepeatedMeasurementsModel
from gibbslab.models.truncation import (
    NonregularScaleModel,
    RoundedDataModel,
    StochasticFrontierModel,
)
from gibbslab.reparam import CENTERED, NONCENTERED, Parametrization
from gibbslab.rng import RngStream
from gibbslab.stats import ks_statistic

from oracles import mixture_weight_posterior_cdf


# -- registry ------------------------------------------------------------------


def test_registry_lists_every_model():
    names = {
        "repeated_measurements", "gaussian_hmm", "nonregular_scale",
        "stochastic_frontier", "rounded_data", "classification",
        "heavy_tail_hmm", "discretized_sv", "stick_breaking",
        "latent_poisson", "observed_diffusion", "gmrf_hybrid",
    }
    assert set(MODEL_REGISTRY) == names
    for name, cls in MODEL_REGISTRY.items():
        assert get_model(name) is cls
        assert cls.name == name


def test_registry_rejects_unknown_name():
    with pytest.raises(InvalidParameterError, match="unknown model"):
        get_model("laplace_tower")


# -- repeated measurements -------------------------------------------------------


def test_location_rates_match_the_closed_forms():
    m = RepeatedMeasurementsModel.synthesize(n=25, theta_star=0.0, data_seed=1,
                                             sigma_x=1.3, sigma_y=0.7)
    lam = 0.7**2 / 25
    assert m.gamma_centered() == pytest.approx(lam / (1.3**2 + lam))
    assert m.gamma_noncentered() == pytest.approx(1.3**2 / (1.3**2 + lam))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=500),
    sx=st.floats(min_value=0.05, max_value=20, allow_nan=False),
    sy=st.floats(min_value=0.05, max_value=20, allow_nan=False),
)
def test_location_rates_are_complementary(n, sx, sy):
    m = RepeatedMeasurementsModel(np.zeros(n), sigma_x=sx, sigma_y=sy)
    assert m.gamma_centered() + m.gamma_noncentered() == pytest.approx(1.0)
    assert 0.0 < m.gamma_centered() < 1.0


def test_location_optimal_weight_balances_both_endpoints():
    m = RepeatedMeasurementsModel.synthesize(n=10, theta_star=0.0, data_seed=0)
    assert m.optimal_weight() == pytest.approx(10.0 / 11.0)
    m2 = RepeatedMeasurementsModel(np.zeros(4), sigma_x=2.0, sigma_y=1.0)
    assert m2.optimal_weight() == pytest.approx(16.0 / 17.0)


def test_location_posterior_moments():
    y = np.array([0.4, -1.2, 2.0, 0.1])
    m = RepeatedMeasurementsModel(y, sigma_x=1.5, sigma_y=0.5)
    mean, var = m.posterior_mean_var()
    assert mean == pytest.approx(y.mean())
    assert var == pytest.approx(1.5**2 + 0.5**2 / 4)


def test_location_centered_conditional_is_the_textbook_normal():
    # flat prior and y independent of theta given the level: theta | x is
    # N(x, sigma_x^2), untouched by the data
    y = np.array([1.0, 2.0, 3.0])
    m = RepeatedMeasurementsModel(y, sigma_x=1.5, sigma_y=2.0)
    got = m.theta_conditional_cdf(CENTERED, 1.7, np.array([0.5, 1.0, 2.5]))
    want = ndtr((np.array([0.5, 1.0, 2.5]) - 1.7) / 1.5)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_location_supports_weighted_and_data_based_schemes():
    m = RepeatedMeasurementsModel.synthesize(n=6, theta_star=0.0, data_seed=3)
    schemes = (CENTERED, NONCENTERED, Parametrization.partial(0.3),
               Parametrization.data_based("vm"))
    for p in schemes:
        assert m.supports(p)
        cfg = SamplerConfig(iterations=200, burn_in=50, seed=9, parametrization=p)
        tr = run_chain(m, cfg)
        assert tr.theta.shape == (200,)
        assert np.isfinite(tr.theta).all()
    assert not m.supports(Parametrization.data_based("other"))


# -- gaussian hidden markov chain ---------------------------------------------


def test_hmm_precision_inverts_the_ar1_covariance():
    n, rho, sx = 6, 0.55, 1.4
    m = GaussianHmmModel(np.zeros(n), rho=rho, sigma_x=sx)
    cov = sx**2 * rho ** np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    q = np.column_stack([m._q_matvec(e) for e in np.eye(n)])
    np.testing.assert_allclose(q @ cov, np.eye(n), atol=1e-10)


def test_hmm_no_data_mode_runs_on_the_prior():
    m = GaussianHmmModel.synthesize(n=8, no_data=True, rho=0.4)
    assert m.y is None
    # noncentered parameter conditional collapses to the standard normal prior
    x = np.zeros(8)
    assert m.theta_conditional_variance(NONCENTERED, x) == pytest.approx(1.0)
    np.testing.assert_allclose(
        m.theta_posterior_cdf(np.array([0.0, 1.0])), ndtr([0.0, 1.0])
    )
    cfg = SamplerConfig(iterations=500, burn_in=100, seed=3,
                        parametrization=NONCENTERED)
    tr = run_chain(m, cfg)
    assert abs(tr.theta.mean()) < 0.5


def test_hmm_input_validation():
    with pytest.raises(InvalidParameterError):
        GaussianHmmModel(np.zeros(3), rho=1.0)
    with pytest.raises(InvalidParameterError):
        GaussianHmmModel(np.zeros(3), sigma_x=0.0)
    with pytest.raises(InvalidParameterError):
        GaussianHmmModel(None)  # no-data mode needs a length


def test_hmm_posterior_cdf_centers_on_the_gls_mean():
    m = GaussianHmmModel.synthesize(n=40, theta_star=2.0, data_seed=7, rho=0.5)
    lo = m.theta_posterior_cdf(np.array([-50.0]))
    hi = m.theta_posterior_cdf(np.array([50.0]))
    assert lo[0] == pytest.approx(0.0, abs=1e-12)
    assert hi[0] == pytest.approx(1.0, abs=1e-12)
    mid = float(m.theta_posterior_cdf(np.array([2.0]))[0])
    assert 0.05 < mid < 0.95  # truth is well inside the posterior bulk


# -- uniform scale with measurement error ---------------------------------------


def test_scale_centered_draw_matches_the_pareto_tail():
    m = NonregularScaleModel.synthesize(n=6, theta_star=2.0, data_seed=11)
    x = np.array([0.3, 1.1, 0.8, 1.9, 0.2, 1.5])
    rng = RngStream(3, 0)
    draws = np.array([m.draw_theta_exact(CENTERED, x, rng) for _ in range(4000)])
    assert draws.min() > x.max()
    stat = ks_statistic(draws, lambda t: m.theta_conditional_cdf(CENTERED, x, t))
    assert stat < 0.03


def test_scale_conditional_variance_needs_four_sites():
    m3 = NonregularScaleModel(np.array([0.1, 0.5, 0.9]))
    assert m3.theta_conditional_variance(CENTERED, np.array([0.1, 0.2, 0.3])) == np.inf
    m4 = NonregularScaleModel(np.array([0.1, 0.5, 0.9, 0.4]))
    v = m4.theta_conditional_variance(CENTERED, np.array([0.1, 0.2, 0.3, 0.4]))
    assert np.isfinite(v) and v > 0


def test_scale_rejects_tiny_samples():
    with pytest.raises(DegenerateSupportError):
        NonregularScaleModel(np.array([1.0]))
    with pytest.raises(InvalidParameterError):
        NonregularScaleModel.synthesize(n=3, theta_star=-1.0)


def test_scale_log_joint_enforces_the_box():
    m = NonregularScaleModel(np.array([0.5, 0.7]))
    assert np.isfinite(m.log_joint(np.array([0.2, 0.4]), 1.0))
    assert m.log_joint(np.array([0.2, 1.4]), 1.0) == -np.inf
    assert m.log_joint(np.array([-0.1, 0.4]), 1.0) == -np.inf
    assert m.log_joint(np.array([0.2, 0.4]), -2.0) == -np.inf


# -- frontier with one-sided slack ----------------------------------------------


def test_frontier_noncentered_variance_is_exactly_the_slack_rate():
    for n, lam in ((5, 1.0), (95, 1.0), (20, 2.5)):
        m = StochasticFrontierModel.synthesize(n=n, theta_star=0.0,
                                               data_seed=1, lam=lam)
        xs = np.zeros(n)
        want = 1.0 / (n * lam) ** 2
        assert abs(m.theta_conditional_variance(NONCENTERED, xs) - want) < 1e-12


def test_frontier_noncentered_draw_sits_above_the_edge():
    m = StochasticFrontierModel.synthesize(n=8, theta_star=1.0, data_seed=5)
    rng = RngStream(2, 0)
    xs = rng.standard_normal(8)
    edge = float(np.max(m.y - xs))
    draws = np.array([m.draw_theta_exact(NONCENTERED, xs, rng) for _ in range(2000)])
    assert draws.min() >= edge
    assert draws.mean() == pytest.approx(edge + 1.0 / (8 * m.lam), rel=0.1)


def test_frontier_centered_conditional_is_gaussian_in_the_mean():
    m = StochasticFrontierModel.synthesize(n=12, theta_star=0.0, data_seed=2,
                                           sigma_x=1.5)
    x = RngStream(4, 0).standard_normal(12)
    assert m.theta_conditional_variance(CENTERED, x) == pytest.approx(1.5**2 / 12)
    got = m.theta_conditional_cdf(CENTERED, x, np.array([x.mean()]))
    assert got[0] == pytest.approx(0.5, abs=1e-12)


# -- rounding to the integer grid -------------------------------------------------


def test_rounded_noncentered_interval_intersects_the_shifted_cells():
    m = RoundedDataModel(np.array([0.0, 1.0]))
    lo, hi = m._ncp_interval(np.array([0.4, 0.9]))
    assert lo == pytest.approx(0.1)
    assert hi == pytest.approx(0.6)
    with pytest.raises(EmptyIntervalError):
        m._ncp_interval(np.array([1.2, 0.1]))


def test_rounded_noncentered_draw_is_uniform_on_the_interval():
    m = RoundedDataModel(np.array([0.0, 0.0, 1.0]))
    xs = np.array([0.5, 0.2, 0.7])
    lo, hi = m._ncp_interval(xs)
    rng = RngStream(6, 0)
    draws = np.array([m.draw_theta_exact(NONCENTERED, xs, rng) for _ in range(3000)])
    assert lo < draws.min() and draws.max() < hi
    stat = ks_statistic(draws, lambda t: np.clip((t - lo) / (hi - lo), 0, 1))
    assert stat < 0.035


def test_rounded_latent_sites_stay_in_their_cells():
    m = RoundedDataModel.synthesize(n=30, theta_star=0.3, data_seed=9)
    x = m.draw_x_exact(0.3, None, RngStream(1, 0))
    assert np.all(x >= m.y) and np.all(x < m.y + 1.0)
    assert m.log_joint(x, 0.3) > -np.inf
    assert m.log_joint(x + 1.0, 0.3) == -np.inf


# -- two-component classification -------------------------------------------------


def test_classification_disjoint_labels_are_forced_by_the_data():
    y = np.array([0.5, 2.5, 0.1, 2.9])
    m = ClassificationMixtureModel(y, scenario="disjoint")
    x = m.draw_x_exact(0.37, None, RngStream(8, 0))
    np.testing.assert_array_equal(x, [1.0, 0.0, 1.0, 0.0])


def test_classification_identical_labels_ignore_the_data():
    m = ClassificationMixtureModel(np.array([5.0, -5.0, 0.0]), scenario="identical")
    rng = RngStream(12, 0)
    draws = np.array([m.draw_x_exact(0.25, None, rng) for _ in range(4000)])
    rates = draws.mean(axis=0)
    np.testing.assert_allclose(rates, 0.25, atol=0.03)


def test_classification_chain_recovers_the_integrated_posterior():
    m = ClassificationMixtureModel.synthesize(n=12, theta_star=0.4, data_seed=21,
                                              scenario="general")
    cfg = SamplerConfig(iterations=30_000, burn_in=2000, seed=4)
    tr = run_chain(m, cfg)
    oracle = mixture_weight_posterior_cdf(m._lf0, m._lf1)
    assert ks_statistic(tr.theta, oracle) < 0.03


def test_classification_segment_cdf_is_a_proper_cdf():
    m = ClassificationMixtureModel.synthesize(n=7, theta_star=0.5, data_seed=2)
    xs = RngStream(5, 0).open_unit(size=7)
    t = np.linspace(0, 1, 101)
    c = m.theta_conditional_cdf(NONCENTERED, xs, t)
    assert c[0] == pytest.approx(0.0, abs=1e-12)
    assert c[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(c) >= -1e-15)


def test_classification_rejects_bad_inputs():
    with pytest.raises(InvalidScenarioError):
        ClassificationMixtureModel(np.array([0.5]), scenario="triple")
    with pytest.raises(DegenerateSupportError):
        ClassificationMixtureModel(np.array([1.5]), scenario="disjoint")
    with pytest.raises(InvalidParameterError):
        ClassificationMixtureModel.synthesize(n=3, theta_star=1.5)


# -- heavy-tailed level ------------------------------------------------------------


@pytest.mark.parametrize("direction", ["cauchy-obs", "cauchy-latent"])
def test_heavy_tail_mode_finder_matches_grid_argmax(direction):
    m = HeavyTailHmmModel.synthesize(n=5, theta_star=0.0, data_seed=3,
                                     direction=direction)
    for theta in (-3.0, 0.0, 4.0):
        grid = np.linspace(-30, 30, 240_001)
        logv = m._log_prior_x(grid, theta) + m._log_lik_x(grid)
        want = grid[np.argmax(logv)]
        got = m.conditional_x_mode(theta)
        assert m.log_joint(got, theta) >= logv.max() - 1e-6
        assert abs(got - want) < 2e-3


def test_heavy_tail_surface_symmetry_with_symmetric_data():
    m = HeavyTailHmmModel(np.zeros(4), direction="cauchy-latent")
    axis, surf = figure_surface(m, lo=-10.0, hi=10.0, step=0.5)
    assert surf.shape == (axis.size, axis.size)
    np.testing.assert_allclose(surf, surf[::-1, ::-1], atol=1e-10)


def test_heavy_tail_centered_draw_uses_the_gaussian_layer():
    m = HeavyTailHmmModel(np.array([0.0]), direction="cauchy-obs", sigma_x=2.0)
    rng = RngStream(9, 0)
    draws = np.array([m.draw_theta_exact(CENTERED, 1.0, rng) for _ in range(5000)])
    assert draws.mean() == pytest.approx(1.0, abs=0.1)
    assert draws.std() == pytest.approx(2.0, rel=0.05)


def test_heavy_tail_single_observation_noncentered_draw_is_cauchy():
    m = HeavyTailHmmModel(np.array([3.0]), direction="cauchy-obs")
    rng = RngStream(14, 0)
    draws = np.array([m.draw_theta_exact(NONCENTERED, 0.5, rng) for _ in range(6000)])
    assert np.median(draws) == pytest.approx(2.5, abs=0.1)
    # quartiles of a unit Cauchy sit one scale away from the center
    q1, q3 = np.quantile(draws, [0.25, 0.75])
    assert q3 - q1 == pytest.approx(2.0, rel=0.1)


def test_heavy_tail_rejects_unknown_direction():
    with pytest.raises(InvalidScenarioError):
        HeavyTailHmmModel(np.array([0.0]), direction="cauchy-both")
