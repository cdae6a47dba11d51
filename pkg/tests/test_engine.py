"""Engine-level tests: grid sampling, Metropolis primitives, chain runners."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from gibbslab.engine import (
    ExactConditional,
    GridDensity,
    RandomWalkMH,
    SamplerConfig,
    grid_inverse_cdf_update,
    mh_step,
    run_centered,
    run_chain,
    run_interleaved,
    run_noncentered,
    sweep_kernel,
)
from gibbslab.errors import (
    ConfigError,
    DegenerateConditionalError,
    InsufficientGridError,
    NonfiniteTargetError,
    SupportNotCoveredError,
)
from gibbslab.model import GibbsModel
from gibbslab.models.location import RepeatedMeasurementsModel
from gibbslab.reparam import CENTERED, NONCENTERED, Parametrization
from gibbslab.rng import RngStream


def _normal_grid(points=4001, span=9.0):
    grid = np.linspace(-span, span, points)
    return grid, -0.5 * grid**2


# ---------------------------------------------------------------------------
# GridDensity
# ---------------------------------------------------------------------------


def test_grid_density_samples_match_normal_law():
    grid, logv = _normal_grid()
    dens = GridDensity(grid, logv)
    rng = RngStream(11, 0)
    draws = np.array([dens.sample(rng) for _ in range(20000)])
    assert sps.kstest(draws, sps.norm.cdf).statistic < 0.02
    assert draws.min() >= grid[0] and draws.max() <= grid[-1]


def test_grid_density_cdf_tracks_normal_cdf():
    grid, logv = _normal_grid(points=8193)
    dens = GridDensity(grid, logv)
    t = np.linspace(-4.0, 4.0, 101)
    np.testing.assert_allclose(dens.cdf(t), sps.norm.cdf(t), atol=1e-5)
    assert dens.cdf(grid[0] - 1.0) == 0.0
    assert dens.cdf(grid[-1] + 1.0) == pytest.approx(1.0, abs=1e-12)


def test_grid_density_mean_of_skewed_density():
    grid = np.linspace(0.0, 35.0, 4097)
    dens = GridDensity(grid, -grid, closed=(True, False))  # Exp(1) on [0, 35]
    assert dens.mean() == pytest.approx(1.0, abs=1e-3)


def test_closed_endpoints_admit_boundary_mass():
    grid = np.linspace(0.0, 1.0, 16)
    dens = GridDensity(grid, np.zeros(16), closed=(True, True))
    assert dens.cdf(0.5) == pytest.approx(0.5, abs=1e-12)
    assert dens.mean() == pytest.approx(0.5, abs=1e-12)


def test_grid_density_rejects_bad_grids():
    with pytest.raises(InsufficientGridError):
        GridDensity(np.array([0.0, 1.0, 2.0]), np.zeros(3))
    with pytest.raises(InsufficientGridError):
        GridDensity(np.array([0.0, 1.0, 1.0, 2.0]), np.zeros(4))
    with pytest.raises(InsufficientGridError):
        GridDensity(np.linspace(0, 1, 5), np.zeros(4))


def test_grid_density_detects_clipped_tails():
    grid = np.linspace(-2.0, 2.0, 64)  # normal density far from zero at the ends
    with pytest.raises(SupportNotCoveredError):
        GridDensity(grid, -0.5 * grid**2)


def test_grid_density_needs_finite_peak():
    grid = np.linspace(0.0, 1.0, 8)
    with pytest.raises(NonfiniteTargetError):
        GridDensity(grid, np.full(8, -np.inf))


def test_grid_inverse_cdf_update_draws_from_target():
    rng = RngStream(3, 0)
    grid = np.linspace(3.0 - 18.0, 3.0 + 18.0, 2001)
    draws = np.array(
        [grid_inverse_cdf_update(lambda t: -0.125 * (t - 3.0) ** 2, grid, rng)
         for _ in range(20000)]
    )
    assert sps.kstest(draws, sps.norm(loc=3.0, scale=2.0).cdf).statistic < 0.02


# ---------------------------------------------------------------------------
# Metropolis primitive
# ---------------------------------------------------------------------------


def test_mh_step_rejects_proposals_outside_support():
    rng = RngStream(1, 0)
    current = -1.25
    logf = lambda t: 0.0 if t == current else -math.inf
    new, accepted = mh_step(logf, current, 0.5, rng)
    assert new == current and not accepted


def test_mh_step_raises_when_current_state_is_invalid():
    rng = RngStream(1, 0)
    with pytest.raises(NonfiniteTargetError):
        mh_step(lambda t: -math.inf, 0.0, 0.5, rng)
    with pytest.raises(NonfiniteTargetError):
        mh_step(lambda t: math.nan, 0.0, 0.5, rng)


def test_mh_step_preserves_normal_target_moments():
    rng = RngStream(8, 0)
    x = 0.0
    out = np.empty(20000)
    for i in range(out.size):
        for _ in range(3):
            x, _ = mh_step(lambda t: -0.5 * t * t, x, 2.4, rng)
        out[i] = x
    assert abs(out.mean()) < 0.05
    assert out.var() == pytest.approx(1.0, rel=0.1)


# ---------------------------------------------------------------------------
# run_chain on the Gaussian calibration model
# ---------------------------------------------------------------------------


def _model(n=30, seed=0):
    return RepeatedMeasurementsModel.synthesize(n=n, theta_star=0.0, data_seed=seed)


def test_run_chain_respects_lengths_and_thinning():
    m = _model()
    tr = run_chain(m, SamplerConfig(iterations=200, burn_in=50, thin=4, seed=2))
    assert tr.theta.shape == (50,)
    assert tr.model == "repeated_measurements"
    assert tr.parametrization == CENTERED
    assert tr.wall_time > 0
    assert np.all(np.isfinite(tr.theta))


def test_run_chain_is_reproducible_per_seed():
    m = _model()
    cfg = SamplerConfig(iterations=300, burn_in=20, seed=7, parametrization=NONCENTERED)
    a = run_chain(m, cfg)
    b = run_chain(m, cfg)
    c = run_chain(m, SamplerConfig(iterations=300, burn_in=20, seed=8,
                                   parametrization=NONCENTERED))
    np.testing.assert_array_equal(a.theta, b.theta)
    assert not np.array_equal(a.theta, c.theta)
    assert a.final_theta == a.theta[-1]


def test_run_chain_records_conditional_variance_oracle():
    m = _model()
    tr = run_chain(m, SamplerConfig(iterations=100, seed=1))
    cv = tr.functionals["theta_cond_var"]
    # for this model the conditional variance is state-free under centering
    expected = m.theta_conditional_variance(CENTERED, 0.0)
    np.testing.assert_allclose(cv, expected)
    off = run_chain(m, SamplerConfig(iterations=100, seed=1,
                                     record_conditional_variance=False))
    assert "theta_cond_var" not in off.functionals


def test_run_chain_rejects_unknown_functionals():
    with pytest.raises(ConfigError, match="no functional"):
        run_chain(_model(), SamplerConfig(iterations=50, functionals=("nope",)))


def test_run_chain_rejects_direct_route_where_absent():
    with pytest.raises(ConfigError, match="direct"):
        run_chain(_model(), SamplerConfig(iterations=50, direct_latent=True))


def test_exact_conditional_reports_full_acceptance():
    tr = run_chain(_model(), SamplerConfig(iterations=100, seed=3))
    assert tr.acceptance_rates == {"latent": 1.0, "theta": 1.0}
    assert tr.meta["direct_latent"] is False


def test_sampler_config_validation():
    with pytest.raises(ConfigError):
        SamplerConfig(iterations=-1)
    with pytest.raises(ConfigError):
        SamplerConfig(iterations=10, burn_in=-2)
    with pytest.raises(ConfigError):
        SamplerConfig(iterations=10, thin=0)


def test_scheme_wrappers_force_their_parametrization():
    m = _model()
    cfg = SamplerConfig(iterations=60, seed=5, parametrization=NONCENTERED)
    assert run_centered(m, cfg).parametrization == CENTERED
    assert run_noncentered(m, SamplerConfig(iterations=60, seed=5)).parametrization == NONCENTERED
    part = Parametrization.partial(0.25)
    assert run_noncentered(m, SamplerConfig(iterations=60, seed=5, parametrization=part)).parametrization == part


def test_posterior_of_short_centered_chain_matches_oracle():
    m = _model(n=10, seed=4)
    tr = run_chain(m, SamplerConfig(iterations=60000, burn_in=1000, seed=9))
    mean, var = m.posterior_mean_var()
    assert sps.kstest(tr.theta, lambda t: m.theta_posterior_cdf(t)).statistic < 0.02
    assert tr.theta.mean() == pytest.approx(mean, abs=4 * math.sqrt(var * 600 / tr.theta.size))


# ---------------------------------------------------------------------------
# Random-walk pilot adaptation
# ---------------------------------------------------------------------------


def test_pilot_tuning_runs_only_during_burn_in():
    m = _model(n=10)
    hint = m.theta_step_hint()
    tuned = run_chain(m, SamplerConfig(iterations=500, burn_in=1500, seed=6,
                                       theta_update=RandomWalkMH()))
    assert tuned.meta["theta_step_sd"] != hint
    assert 0.5 < tuned.meta["theta_step_sd"] < 10.0
    frozen = run_chain(m, SamplerConfig(iterations=500, burn_in=1500, seed=6,
                                        theta_update=RandomWalkMH(step_sd=0.7)))
    assert frozen.meta["theta_step_sd"] == 0.7
    cold = run_chain(m, SamplerConfig(iterations=500, burn_in=0, seed=6,
                                      theta_update=RandomWalkMH()))
    assert cold.meta["theta_step_sd"] == hint
    assert 0.0 < tuned.acceptance_rates["theta"] < 1.0


# ---------------------------------------------------------------------------
# Degeneracy probe
# ---------------------------------------------------------------------------


class _StuckModel(GibbsModel):
    """Parameter conditional that has collapsed to a point."""

    name = "stuck"

    def __init__(self):
        super().__init__()
        self.y = np.array([0.0])

    def supported_parametrizations(self):
        return (CENTERED,)

    def initial_theta(self, rng):
        return 1.0

    def draw_x_prior(self, theta, rng):
        return rng.standard_normal()

    def draw_x_exact(self, theta, x, rng):
        return rng.standard_normal()

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        return 1.0


def test_collapsed_conditional_is_detected_early():
    with pytest.raises(DegenerateConditionalError):
        run_chain(_StuckModel(), SamplerConfig(iterations=500, seed=0))


def test_degeneracy_probe_can_be_disabled():
    tr = run_chain(_StuckModel(), SamplerConfig(iterations=150, seed=0,
                                                check_degeneracy=False))
    assert np.all(tr.theta == 1.0)


# ---------------------------------------------------------------------------
# Interleaving and the exposed sweep kernel
# ---------------------------------------------------------------------------


def test_interleaved_chain_reports_both_halves():
    m = _model()
    cfg_c = SamplerConfig(iterations=80, burn_in=10, seed=12)
    cfg_n = SamplerConfig(iterations=80, parametrization=NONCENTERED)
    tr = run_interleaved(m, cfg_c, cfg_n)
    assert tr.theta.shape == (80,)
    assert set(tr.acceptance_rates) == {
        "centered_latent", "centered_theta",
        "noncentered_latent", "noncentered_theta",
    }
    assert tr.meta == {"scheme": "interleaved", "reverse": False}
    rev = run_interleaved(m, cfg_c, cfg_n, reverse=True)
    assert rev.meta["reverse"] is True
    assert not np.array_equal(tr.theta, rev.theta)


def test_sweep_kernel_steps_match_a_full_chain_shape():
    m = _model(n=10)
    init, step = sweep_kernel(m, SamplerConfig(iterations=1))
    rng = RngStream(21, 0)
    theta = 50.0
    x = init(theta, rng)
    seen = []
    for _ in range(60):
        theta, x = step(theta, x, rng)
        seen.append(theta)
    mean, var = m.posterior_mean_var()
    # the centered kernel contracts quickly at this data size
    assert abs(seen[-1] - mean) < 5 * math.sqrt(var)
    assert len(set(seen)) == len(seen)


def test_sweep_kernel_rejects_unsupported_parametrization():
    from gibbslab.errors import UnsupportedParametrizationError

    with pytest.raises(UnsupportedParametrizationError):
        sweep_kernel(_model(), SamplerConfig(iterations=1,
                                             parametrization=Parametrization.data_based("nope")))
