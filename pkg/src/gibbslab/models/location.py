"""Repeated noisy measurements of one latent level.

The workhorse calibration model: y_i ~ N(x, sigma_y^2) for a single latent
x ~ N(theta, sigma_x^2) with a flat prior on theta. Everything is jointly
Gaussian, so every conditional, the posterior, and both convergence rates
have closed forms, which makes this the model that pins the engine and the
diagnostics to analytic truth.

All four parametrization families are registered: centered, the location
shift x = xstar + theta, the scalar-weight interpolation
x = xstar + (1 - w) * theta, and the conditionally standardized map
x = sqrt(v) * xstar + m(theta) built from the latent conditional moments.
Every parameter update is the same affine-Gaussian computation: writing
x = b * theta + c with (b, c) read off the parametrization, the conditional
is normal with precision (1-b)^2/sigma_x^2 + n b^2/sigma_y^2.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from ..errors import InvalidParameterError, UnsupportedParametrizationError
from ..model import GibbsModel
from ..reparam import (
    CENTERED,
    NONCENTERED,
    Parametrization,
    Reparametrization,
    identity_reparam,
    location_ncp,
    location_weight_partial,
    partial_ncp,
)
from ..distributions import Normal
from ..rng import RngStream

__all__ = ["RepeatedMeasurementsModel", "build_repeated_measurements"]

VM = Parametrization.data_based("vm")


class RepeatedMeasurementsModel(GibbsModel):
    name = "repeated_measurements"

    def __init__(self, y, sigma_x: float = 1.0, sigma_y: float = 1.0):
        super().__init__()
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.size < 1:
            raise InvalidParameterError("need at least one observation")
        if not (sigma_x > 0 and sigma_y > 0):
            raise InvalidParameterError("sigma_x and sigma_y must be positive")
        self.y = y
        self.n = int(y.size)
        self.sigma_x = float(sigma_x)
        self.sigma_y = float(sigma_y)
        self.ybar = float(y.mean())
        # precision of x | theta, y
        self._tau = self.n / self.sigma_y**2 + 1.0 / self.sigma_x**2

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 0.0, data_seed: int = 0,
                   sigma_x: float = 1.0, sigma_y: float = 1.0):
        rng = RngStream(data_seed, 0)
        x = theta_star + sigma_x * rng.standard_normal()
        y = x + sigma_y * rng.standard_normal(n)
        return cls(y, sigma_x=sigma_x, sigma_y=sigma_y)

    # -- parametrizations ------------------------------------------------------

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED, Parametrization.partial(0.5), VM)

    def reparam(self, p: Parametrization) -> Reparametrization:
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return location_ncp(Normal(0.0, self.sigma_x))
        if p.kind == "partial" and p.weight is not None:
            return location_weight_partial(p.weight)
        if p == VM:
            return partial_ncp(
                v=lambda theta, y: 1.0 / self._tau,
                m=lambda theta, y: self._x_cond_mean(theta),
            )
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def _affine(self, p: Parametrization, xstar):
        """Coefficients (b, c) of x = b*theta + c under parametrization p."""
        xs = float(np.asarray(xstar).reshape(()))
        if p == CENTERED:
            return 0.0, xs
        if p == NONCENTERED:
            return 1.0, xs
        if p.kind == "partial" and p.weight is not None:
            return 1.0 - p.weight, xs
        if p == VM:
            b = (1.0 / self.sigma_x**2) / self._tau
            c = math.sqrt(1.0 / self._tau) * xs + (self.n * self.ybar / self.sigma_y**2) / self._tau
            return b, c
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def _theta_law(self, p: Parametrization, xstar):
        b, c = self._affine(p, xstar)
        sx2 = self.sigma_x**2
        sy2 = self.sigma_y**2
        prec = (1.0 - b) ** 2 / sx2 + self.n * b**2 / sy2
        mean = ((1.0 - b) * c / sx2 + self.n * b * (self.ybar - c) / sy2) / prec
        return mean, math.sqrt(1.0 / prec)

    # -- engine contract -------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        return self.ybar + math.sqrt(self.sigma_x**2 + self.sigma_y**2 / self.n) * rng.standard_normal()

    def draw_x_prior(self, theta, rng):
        return theta + self.sigma_x * rng.standard_normal()

    def _x_cond_mean(self, theta) -> float:
        return (self.n * self.ybar / self.sigma_y**2 + theta / self.sigma_x**2) / self._tau

    def draw_x_exact(self, theta, x, rng):
        return self._x_cond_mean(theta) + math.sqrt(1.0 / self._tau) * rng.standard_normal()

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        m, sd = self._theta_law(p, xstar)
        return m + sd * rng.standard_normal()

    def log_theta_conditional(self, p, xstar, theta):
        m, sd = self._theta_law(p, xstar)
        return -0.5 * ((theta - m) / sd) ** 2

    def theta_conditional_variance(self, p, xstar):
        _, sd = self._theta_law(p, xstar)
        return sd * sd

    def theta_conditional_cdf(self, p, xstar, t):
        m, sd = self._theta_law(p, xstar)
        return ndtr((np.asarray(t, dtype=float) - m) / sd)

    def x_conditional_cdf(self, theta, x, i, v):
        m = self._x_cond_mean(theta)
        return ndtr((np.asarray(v, dtype=float) - m) * math.sqrt(self._tau))

    def log_joint(self, x, theta) -> float:
        xv = float(np.asarray(x).reshape(()))
        out = -0.5 * (xv - theta) ** 2 / self.sigma_x**2
        out += -0.5 * float(np.sum((self.y - xv) ** 2)) / self.sigma_y**2
        return out

    # -- analytic oracles ------------------------------------------------------

    def posterior_mean_var(self):
        return self.ybar, self.sigma_x**2 + self.sigma_y**2 / self.n

    def theta_posterior_cdf(self, t):
        m, v = self.posterior_mean_var()
        return ndtr((np.asarray(t, dtype=float) - m) / math.sqrt(v))

    def gamma_centered(self) -> float:
        """Rate of the centered chain: shrinks like 1/n as data accumulate."""
        s = self.sigma_y**2 / self.n
        return s / (self.sigma_x**2 + s)

    def gamma_noncentered(self) -> float:
        """Rate of the noncentered chain; complements gamma_centered to 1."""
        s = self.sigma_y**2 / self.n
        return self.sigma_x**2 / (self.sigma_x**2 + s)

    def optimal_weight(self) -> float:
        """Weight whose partial scheme decouples the two blocks entirely."""
        k = self.n * self.sigma_x**2
        return k / (k + self.sigma_y**2)


def build_repeated_measurements(params: dict, y) -> RepeatedMeasurementsModel:
    return RepeatedMeasurementsModel(y, **params)
