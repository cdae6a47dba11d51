"""Transform-layer tests: labels, the stock reparametrizations, composition."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gibbslab.distributions import Exponential, Normal, Uniform, cdf, draw
from gibbslab.errors import (
    InvalidParameterError,
    NonpositiveScaleError,
    NonpositiveVarianceError,
    NotPositiveDefiniteError,
)
from gibbslab.reparam import (
    CENTERED,
    NONCENTERED,
    Parametrization,
    compose_reparam,
    gaussian_field_ncp,
    identity_reparam,
    inverse_cdf_ncp,
    location_ncp,
    location_weight_partial,
    markov_recursive_ncp,
    partial_ncp,
    scale_ncp,
)
from gibbslab.rng import RngStream
from gibbslab.stats import two_sample_ks


# ---------------------------------------------------------------------------
# Parametrization labels
# ---------------------------------------------------------------------------


def test_singletons_have_plain_labels():
    assert CENTERED.label() == "centered"
    assert NONCENTERED.label() == "noncentered"
    assert Parametrization.from_string(" centered ") == CENTERED


def test_partial_weight_label_round_trip():
    p = Parametrization.partial(0.25)
    assert p.label() == "partial:0.25"
    assert Parametrization.from_string(p.label()) == p


def test_partial_tag_and_data_based_labels():
    assert Parametrization.from_string("partial:hybrid") == Parametrization.partial_tagged("hybrid")
    assert Parametrization.from_string("data_based:vm") == Parametrization.data_based("vm")
    assert Parametrization.data_based("bridge").label() == "data_based:bridge"


def test_numeric_partial_text_parses_as_weight_not_tag():
    p = Parametrization.from_string("partial:1")
    assert p.weight == 1.0 and p.tag is None
    assert p == Parametrization.partial(1.0)


@pytest.mark.parametrize(
    "build",
    [
        lambda: Parametrization("sideways"),
        lambda: Parametrization("partial"),
        lambda: Parametrization("partial", weight=1.5),
        lambda: Parametrization("partial", weight=-0.1),
        lambda: Parametrization("data_based"),
        lambda: Parametrization("centered", weight=0.5),
        lambda: Parametrization("noncentered", tag="x"),
    ],
)
def test_invalid_label_constructions_rejected(build):
    with pytest.raises(InvalidParameterError):
        build()


@pytest.mark.parametrize("text", ["partial:", "data_based:", "fancy:1", ""])
def test_unparseable_label_text_rejected(text):
    with pytest.raises(InvalidParameterError):
        Parametrization.from_string(text)


@given(st.integers(min_value=0, max_value=64))
def test_weight_labels_round_trip_exactly(k):
    # dyadic weights survive the %g rendering without rounding
    p = Parametrization.partial(k / 64.0)
    assert Parametrization.from_string(p.label()) == p


def test_labels_are_hashable_dict_keys():
    table = {CENTERED: 1, NONCENTERED: 2, Parametrization.partial(0.5): 3}
    assert table[Parametrization.partial(0.5)] == 3


# ---------------------------------------------------------------------------
# Stock transforms
# ---------------------------------------------------------------------------


def test_identity_reparam_is_passthrough():
    rp = identity_reparam()
    x = np.array([1.0, -2.0])
    assert rp.forward(x, 3.0, None) is x
    assert rp.conditional_inverse(x, 3.0, None, None) is x


def test_location_shift_forward_and_inverse():
    rp = location_ncp(Normal(0.0, 1.0))
    assert rp.forward(1.5, 2.0, None) == pytest.approx(3.5)
    x = np.array([0.0, 1.0, -4.0])
    back = rp.conditional_inverse(rp.forward(x, -0.75, None), -0.75, None, None)
    np.testing.assert_allclose(back, x, atol=1e-15)
    assert rp.xstar_prior == Normal(0.0, 1.0)


def test_scale_transform_round_trip_and_guard():
    rp = scale_ncp(Exponential(1.0))
    x = np.array([0.3, 2.0])
    np.testing.assert_allclose(
        rp.conditional_inverse(rp.forward(x, 1.7, None), 1.7, None, None), x
    )
    for theta in (0.0, -2.0):
        with pytest.raises(NonpositiveScaleError):
            rp.forward(x, theta, None)
        with pytest.raises(NonpositiveScaleError):
            rp.conditional_inverse(x, theta, None, None)


@given(st.floats(min_value=1e-3, max_value=1.0 - 1e-3), st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=100)
def test_quantile_transform_round_trips(u, theta):
    rp = inverse_cdf_ncp(lambda t: Exponential(t))
    x = rp.forward(u, theta, None)
    assert rp.conditional_inverse(x, theta, None, None) == pytest.approx(u, abs=1e-12)
    assert rp.xstar_prior == Uniform(0.0, 1.0)


def test_quantile_transform_draws_are_parameter_free():
    # inverting draws from two very different parameter values must give
    # uniforms with the same law
    rp = inverse_cdf_ncp(lambda t: Exponential(t))
    rng = RngStream(5, 0)
    a = [rp.conditional_inverse(draw(Exponential(1.0), rng), 1.0, None, None) for _ in range(4000)]
    b = [rp.conditional_inverse(draw(Exponential(5.0), rng), 5.0, None, None) for _ in range(4000)]
    stat, pvalue = two_sample_ks(a, b)
    assert stat < 0.05 and pvalue > 1e-6


def test_markov_recursive_matches_manual_recursion():
    rho = 0.6
    rp = markov_recursive_ncp(
        lambda t: Normal(0.0, 1.0),
        lambda t, prev: Normal(rho * prev, 1.0),
    )
    u = np.array([0.31, 0.77, 0.05, 0.5])
    path = rp.forward(u, 0.0, None)
    prev = 0.0
    for i, (ui, xi) in enumerate(zip(u, path)):
        law = Normal(0.0, 1.0) if i == 0 else Normal(rho * prev, 1.0)
        assert cdf(law, xi) == pytest.approx(ui, abs=1e-12)
        prev = xi
    np.testing.assert_allclose(rp.conditional_inverse(path, 0.0, None, None), u, atol=1e-12)


def test_gaussian_field_whitening_round_trip():
    corr = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.4], [0.2, 0.4, 1.0]])
    rp = gaussian_field_ncp(mu=1.0, sigma=2.0, corr=corr)
    z = np.array([0.3, -1.1, 0.9])
    x = rp.forward(z, None, None)
    np.testing.assert_allclose(rp.conditional_inverse(x, None, None, None), z, atol=1e-12)
    # identity correlation reduces to the affine map
    plain = gaussian_field_ncp(mu=1.0, sigma=2.0, corr=np.eye(3))
    np.testing.assert_allclose(plain.forward(z, None, None), 2.0 * z + 1.0)
    # a (mu, sigma) pair overrides the built-in values
    np.testing.assert_allclose(plain.forward(z, (0.0, 1.0), None), z)


def test_gaussian_field_rejects_bad_inputs():
    with pytest.raises(InvalidParameterError):
        gaussian_field_ncp(0.0, 1.0, np.ones((2, 3)))
    with pytest.raises(NotPositiveDefiniteError):
        gaussian_field_ncp(0.0, 1.0, np.array([[1.0, 2.0], [2.0, 1.0]]))
    rp = gaussian_field_ncp(0.0, 1.0, np.eye(2))
    with pytest.raises(NonpositiveScaleError):
        rp.forward(np.zeros(2), (0.0, -1.0), None)


def test_partial_affine_round_trip_and_variance_guard():
    rp = partial_ncp(lambda t, y: t * t, lambda t, y: 3.0 * t)
    x = rp.forward(np.array([1.0, -1.0]), 2.0, None)
    np.testing.assert_allclose(x, [8.0, 4.0])
    np.testing.assert_allclose(
        rp.conditional_inverse(x, 2.0, None, None), [1.0, -1.0], atol=1e-14
    )
    bad = partial_ncp(lambda t, y: -1.0, lambda t, y: 0.0)
    with pytest.raises(NonpositiveVarianceError):
        bad.forward(np.array([1.0]), 2.0, None)


def test_location_weight_endpoints_match_named_transforms():
    z = np.array([0.4, -2.0])
    theta = 1.3
    # weight 1: fully centered, the transform is the identity in x
    np.testing.assert_allclose(location_weight_partial(1.0).forward(z, theta, None), z)
    # weight 0: the full shift, same map as location_ncp
    np.testing.assert_allclose(
        location_weight_partial(0.0).forward(z, theta, None),
        location_ncp(Normal(0.0, 1.0)).forward(z, theta, None),
    )
    with pytest.raises(InvalidParameterError):
        location_weight_partial(1.01)


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=-3.0, max_value=3.0),
    st.floats(min_value=-5.0, max_value=5.0),
)
@settings(max_examples=80)
def test_location_weight_round_trips(w, theta, z):
    rp = location_weight_partial(w)
    x = rp.forward(z, theta, None)
    assert rp.conditional_inverse(x, theta, None, None) == pytest.approx(z, abs=1e-9)


def test_composition_applies_outer_after_inner():
    outer = location_ncp(Normal(0.0, 1.0))
    inner = scale_ncp(Exponential(1.0))
    both = compose_reparam(outer, inner)
    assert both.name == "location(scale)"
    # x = theta * xstar + theta
    assert both.forward(2.0, 3.0, None) == pytest.approx(9.0)
    back = both.conditional_inverse(9.0, 3.0, None, None)
    assert back == pytest.approx(2.0, abs=1e-13)
