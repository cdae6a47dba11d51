"""Three models whose parameter conditional is driven by hard support edges.

Shared shape: n latent sites, conditionally independent given theta, with a
likelihood that truncates each site to an interval. Centered parameter draws
are conjugate or Pareto-tailed; noncentered draws collapse onto order
statistics of the working coordinates, which is where the mixing behaviour
of the two parametrizations separates.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from ..distributions import (
    Normal,
    Uniform,
    truncnorm_cdf,
    truncnorm_draw,
    truncnorm_logpdf,
)
from ..errors import (
    DegenerateSupportError,
    EmptyIntervalError,
    InvalidParameterError,
    UnsupportedParametrizationError,
)
from ..model import GibbsModel
from ..reparam import (
    CENTERED,
    NONCENTERED,
    Parametrization,
    identity_reparam,
    location_ncp,
    scale_ncp,
)
from ..rng import RngStream

__all__ = [
    "NonregularScaleModel",
    "StochasticFrontierModel",
    "RoundedDataModel",
    "build_nonregular_scale",
    "build_stochastic_frontier",
    "build_rounded_data",
]


def _check_parametrization(model, p):
    if p not in (CENTERED, NONCENTERED):
        raise UnsupportedParametrizationError(f"{model.name}: {p.label()}")


class NonregularScaleModel(GibbsModel):
    """Uniform scale with Gaussian measurement error.

    X_i | theta ~ U(0, theta), Y_i | X_i ~ N(X_i, 1), flat prior on theta.
    The centered parameter conditional is a Pareto tail over theta > max X,
    proper only for n >= 2.
    """

    name = "nonregular_scale"

    def __init__(self, y):
        super().__init__()
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.n = int(self.y.size)
        if self.n < 2:
            raise DegenerateSupportError(
                "centered parameter conditional is improper for fewer than two sites"
            )

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 2.0, data_seed: int = 0):
        if theta_star <= 0:
            raise InvalidParameterError("theta_star must be positive")
        rng = RngStream(data_seed, 0)
        x = theta_star * rng.uniform(size=n)
        return cls(x + rng.standard_normal(n))

    def theta_support(self):
        return (0.0, np.inf)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return scale_ncp(Uniform(0.0, 1.0))
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def initial_theta(self, rng: RngStream) -> float:
        return max(float(self.y.max()), 0.0) + 1.0 + rng.exponential()

    def draw_x_prior(self, theta, rng):
        return theta * rng.open_unit(size=self.n)

    def initial_latent(self, theta, rng):
        return self.draw_x_exact(theta, None, rng)

    def draw_x_exact(self, theta, x, rng):
        return truncnorm_draw(rng, self.y, 1.0, 0.0, theta)

    def x_conditional_cdf(self, theta, x, i, v):
        return truncnorm_cdf(np.asarray(v, dtype=float), self.y[i], 1.0, 0.0, theta)

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            m = float(np.max(xstar))
            return m * rng.open_unit() ** (-1.0 / (self.n - 1))
        _check_parametrization(self, p)
        prec = float(np.sum(np.square(xstar)))
        if prec <= 0:
            raise DegenerateSupportError("all working coordinates are zero")
        mean = float(np.dot(xstar, self.y)) / prec
        return float(truncnorm_draw(rng, mean, math.sqrt(1.0 / prec), 0.0, np.inf))

    def log_theta_conditional(self, p, xstar, theta):
        if theta <= 0:
            return -np.inf
        if p == CENTERED:
            if theta <= float(np.max(xstar)):
                return -np.inf
            return -self.n * math.log(theta)
        _check_parametrization(self, p)
        xs = np.asarray(xstar, dtype=float)
        return -0.5 * float(np.sum((self.y - theta * xs) ** 2))

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED:
            n, m = self.n, float(np.max(xstar))
            if n < 4:
                return np.inf  # Pareto tail index too small for a second moment
            return m * m * (n - 1) / ((n - 3) * (n - 2) ** 2)
        _check_parametrization(self, p)
        prec = float(np.sum(np.square(xstar)))
        mean = float(np.dot(xstar, self.y)) / prec
        sd = math.sqrt(1.0 / prec)
        lp = truncnorm_logpdf(np.array([0.0]), mean, sd, 0.0, np.inf)[0]
        a = -mean / sd
        h = math.exp(lp) * sd  # hazard of the standardized lower edge
        return sd * sd * (1.0 + a * h - h * h)

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.asarray(t, dtype=float)
        if p == CENTERED:
            m = float(np.max(xstar))
            out = 1.0 - (m / np.maximum(t, m)) ** (self.n - 1)
            return np.where(t <= m, 0.0, out)
        _check_parametrization(self, p)
        prec = float(np.sum(np.square(xstar)))
        mean = float(np.dot(xstar, self.y)) / prec
        return truncnorm_cdf(t, mean, math.sqrt(1.0 / prec), 0.0, np.inf)

    def log_joint(self, x, theta) -> float:
        if theta <= 0:
            return -np.inf
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0) or np.any(x >= theta):
            return -np.inf
        return -self.n * math.log(theta) - 0.5 * float(np.sum((self.y - x) ** 2))


class StochasticFrontierModel(GibbsModel):
    """Gaussian level observed through one-sided exponential slack.

    X_i | theta ~ N(theta, sigma_x^2), Y_i = X_i - E_i with E_i ~ Exp(lam),
    flat prior on theta. Noncentered, theta rides a shifted exponential off
    the largest y_i - x~_i, with conditional variance exactly (n lam)^-2.
    """

    name = "stochastic_frontier"

    def __init__(self, y, sigma_x: float = 1.0, lam: float = 1.0):
        super().__init__()
        if not (sigma_x > 0 and lam > 0):
            raise InvalidParameterError("sigma_x and lam must be positive")
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.n = int(self.y.size)
        if self.n < 1:
            raise InvalidParameterError("need at least one observation")
        self.sigma_x = float(sigma_x)
        self.lam = float(lam)

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 0.0, data_seed: int = 0,
                   sigma_x: float = 1.0, lam: float = 1.0):
        rng = RngStream(data_seed, 0)
        x = theta_star + sigma_x * rng.standard_normal(n)
        return cls(x - rng.exponential(size=n) / lam, sigma_x=sigma_x, lam=lam)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return location_ncp(Normal(0.0, self.sigma_x))
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def initial_theta(self, rng: RngStream) -> float:
        return float(self.y.max()) + 1.0 / self.lam + self.sigma_x * rng.standard_normal()

    def draw_x_prior(self, theta, rng):
        return theta + self.sigma_x * rng.standard_normal(self.n)

    def initial_latent(self, theta, rng):
        return self.draw_x_exact(theta, None, rng)

    def draw_x_exact(self, theta, x, rng):
        shifted = theta - self.lam * self.sigma_x**2
        return truncnorm_draw(rng, shifted, self.sigma_x, self.y, np.inf)

    def x_conditional_cdf(self, theta, x, i, v):
        shifted = theta - self.lam * self.sigma_x**2
        return truncnorm_cdf(np.asarray(v, dtype=float), shifted, self.sigma_x,
                             self.y[i], np.inf)

    def _ncp_edge(self, xstar) -> float:
        return float(np.max(self.y - np.asarray(xstar, dtype=float)))

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            xbar = float(np.mean(xstar))
            return xbar + self.sigma_x / math.sqrt(self.n) * rng.standard_normal()
        _check_parametrization(self, p)
        return self._ncp_edge(xstar) + rng.exponential() / (self.n * self.lam)

    def log_theta_conditional(self, p, xstar, theta):
        if p == CENTERED:
            xbar = float(np.mean(xstar))
            return -0.5 * self.n * (theta - xbar) ** 2 / self.sigma_x**2
        _check_parametrization(self, p)
        edge = self._ncp_edge(xstar)
        if theta < edge:
            return -np.inf
        return -self.n * self.lam * (theta - edge)

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED:
            return self.sigma_x**2 / self.n
        _check_parametrization(self, p)
        return 1.0 / (self.n * self.lam) ** 2

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.asarray(t, dtype=float)
        if p == CENTERED:
            xbar = float(np.mean(xstar))
            return ndtr((t - xbar) * math.sqrt(self.n) / self.sigma_x)
        _check_parametrization(self, p)
        edge = self._ncp_edge(xstar)
        return np.where(t < edge, 0.0, 1.0 - np.exp(-self.n * self.lam * np.maximum(t - edge, 0.0)))

    def log_joint(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        if np.any(x <= self.y):
            return -np.inf
        out = -0.5 * float(np.sum((x - theta) ** 2)) / self.sigma_x**2
        return out - self.lam * float(np.sum(x - self.y))


class RoundedDataModel(GibbsModel):
    """Gaussian level observed after rounding down to the integer grid.

    X_i | theta ~ N(theta, sigma_x^2), Y_i = floor(X_i), flat prior. Each
    site is pinned to [y_i, y_i + 1); noncentered, theta lives on the
    intersection of the shifted unit intervals.
    """

    name = "rounded_data"

    def __init__(self, y, sigma_x: float = 1.0):
        super().__init__()
        if not sigma_x > 0:
            raise InvalidParameterError("sigma_x must be positive")
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.n = int(self.y.size)
        if self.n < 1:
            raise InvalidParameterError("need at least one observation")
        self.sigma_x = float(sigma_x)

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 0.0, data_seed: int = 0,
                   sigma_x: float = 1.0):
        rng = RngStream(data_seed, 0)
        x = theta_star + sigma_x * rng.standard_normal(n)
        return cls(np.floor(x), sigma_x=sigma_x)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return location_ncp(Normal(0.0, self.sigma_x))
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def initial_theta(self, rng: RngStream) -> float:
        return float(self.y.mean()) + 0.5 + self.sigma_x * rng.standard_normal()

    def draw_x_prior(self, theta, rng):
        return theta + self.sigma_x * rng.standard_normal(self.n)

    def initial_latent(self, theta, rng):
        return self.draw_x_exact(theta, None, rng)

    def draw_x_exact(self, theta, x, rng):
        return truncnorm_draw(rng, theta, self.sigma_x, self.y, self.y + 1.0)

    def x_conditional_cdf(self, theta, x, i, v):
        return truncnorm_cdf(np.asarray(v, dtype=float), theta, self.sigma_x,
                             self.y[i], self.y[i] + 1.0)

    def _ncp_interval(self, xstar):
        xs = np.asarray(xstar, dtype=float)
        lo = float(np.max(self.y - xs))
        hi = float(np.min(self.y + 1.0 - xs))
        if not lo < hi:
            raise EmptyIntervalError(
                f"working coordinates leave no feasible parameter value ({lo} >= {hi})"
            )
        return lo, hi

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            xbar = float(np.mean(xstar))
            return xbar + self.sigma_x / math.sqrt(self.n) * rng.standard_normal()
        _check_parametrization(self, p)
        lo, hi = self._ncp_interval(xstar)
        return lo + (hi - lo) * rng.open_unit()

    def log_theta_conditional(self, p, xstar, theta):
        if p == CENTERED:
            xbar = float(np.mean(xstar))
            return -0.5 * self.n * (theta - xbar) ** 2 / self.sigma_x**2
        _check_parametrization(self, p)
        lo, hi = self._ncp_interval(xstar)
        return 0.0 if lo <= theta < hi else -np.inf

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED:
            return self.sigma_x**2 / self.n
        _check_parametrization(self, p)
        lo, hi = self._ncp_interval(xstar)
        return (hi - lo) ** 2 / 12.0

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.asarray(t, dtype=float)
        if p == CENTERED:
            xbar = float(np.mean(xstar))
            return ndtr((t - xbar) * math.sqrt(self.n) / self.sigma_x)
        _check_parametrization(self, p)
        lo, hi = self._ncp_interval(xstar)
        return np.clip((t - lo) / (hi - lo), 0.0, 1.0)

    def log_joint(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.y) or np.any(x >= self.y + 1.0):
            return -np.inf
        return -0.5 * float(np.sum((x - theta) ** 2)) / self.sigma_x**2


def build_nonregular_scale(params: dict, y) -> NonregularScaleModel:
    return NonregularScaleModel(y, **params)


def build_stochastic_frontier(params: dict, y) -> StochasticFrontierModel:
    return StochasticFrontierModel(y, **params)


def build_rounded_data(params: dict, y) -> RoundedDataModel:
    return RoundedDataModel(y, **params)
