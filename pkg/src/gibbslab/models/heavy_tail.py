"""Scalar location model with one heavy-tailed layer.

A single latent level X sits between the parameter and the data; exactly one
of the two layers is Cauchy:

  cauchy-obs     X | theta ~ N(theta, sigma_x^2),  Y_i | X ~ Cauchy(X, sigma_y)
  cauchy-latent  X | theta ~ Cauchy(theta, sigma_x),  Y_i | X ~ N(X, sigma_y^2)

with a flat prior on theta. Whichever layer is Gaussian gives that side's
parameter draw light tails, and the other side inherits the Cauchy's ability
to jump; started far from the data, the two parametrizations escape at very
different rates, in opposite directions for the two layouts.

Both full conditionals are one dimensional, so they are drawn by exact
inversion of a piecewise-linear density on a grid that resolves the two
places mass can live (near the parameter and near the data). The only closed
forms used are the single-observation Cauchy and the Gaussian conditionals.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from ..distributions import Cauchy, Normal
from ..engine import GridDensity
from ..errors import (
    InvalidParameterError,
    InvalidScenarioError,
    UnsupportedParametrizationError,
)
from ..model import GibbsModel
from ..reparam import CENTERED, NONCENTERED, Parametrization, identity_reparam, location_ncp
from ..rng import RngStream

__all__ = ["HeavyTailHmmModel", "build_heavy_tail_hmm", "figure_surface"]

_DIRECTIONS = ("cauchy-obs", "cauchy-latent")
_GRID_HALF_POINTS = 2049


def _cauchy_logpdf(dev, scale):
    return math.log(scale / math.pi) - np.log(scale * scale + np.square(dev))


def _cauchy_cdf(dev, scale):
    return 0.5 + np.arctan(np.asarray(dev, dtype=float) / scale) / math.pi


def _cauchy_draw(rng: RngStream, loc: float, scale: float) -> float:
    return loc + scale * math.tan(math.pi * (rng.open_unit() - 0.5))


class HeavyTailHmmModel(GibbsModel):
    name = "heavy_tail_hmm"

    def __init__(self, y, direction: str = "cauchy-obs",
                 sigma_x: float = 1.0, sigma_y: float = 1.0):
        super().__init__()
        if direction not in _DIRECTIONS:
            raise InvalidScenarioError(
                f"unknown direction {direction!r}, expected one of {_DIRECTIONS}"
            )
        if not (sigma_x > 0 and sigma_y > 0):
            raise InvalidParameterError("sigma_x and sigma_y must be positive")
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.n = int(self.y.size)
        if self.n < 1:
            raise InvalidParameterError("need at least one observation")
        self.direction = direction
        self.sigma_x = float(sigma_x)
        self.sigma_y = float(sigma_y)
        self._ybar = float(self.y.mean())
        self._ycenter = float(np.median(self.y))

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 0.0, data_seed: int = 0,
                   direction: str = "cauchy-obs",
                   sigma_x: float = 1.0, sigma_y: float = 1.0):
        rng = RngStream(data_seed, 0)
        if direction == "cauchy-obs":
            x = theta_star + sigma_x * rng.standard_normal()
            y = x + sigma_y * np.tan(math.pi * (rng.open_unit(size=n) - 0.5))
        else:
            x = _cauchy_draw(rng, theta_star, sigma_x)
            y = x + sigma_y * rng.standard_normal(n)
        return cls(y, direction=direction, sigma_x=sigma_x, sigma_y=sigma_y)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            if self.direction == "cauchy-obs":
                return location_ncp(Normal(0.0, self.sigma_x))
            return location_ncp(Cauchy(0.0, self.sigma_x))
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    # -- log densities ------------------------------------------------------------

    def _log_prior_x(self, x, theta):
        if self.direction == "cauchy-obs":
            return -0.5 * np.square(x - theta) / self.sigma_x**2
        return _cauchy_logpdf(x - theta, self.sigma_x)

    def _log_lik_x(self, x):
        """Log observation density as a function of the scalar latent."""
        x = np.asarray(x, dtype=float)
        if self.direction == "cauchy-obs":
            dev = self.y[:, None] - np.atleast_1d(x)[None, :]
            out = np.sum(_cauchy_logpdf(dev, self.sigma_y), axis=0)
            return out if x.ndim else float(out[0])
        out = -0.5 * self.n * np.square(x - self._ybar) / self.sigma_y**2
        return out if x.ndim else float(out)

    def log_joint(self, x, theta) -> float:
        return float(self._log_prior_x(x, theta)) + float(self._log_lik_x(x))

    def log_likelihood_x(self, x, theta) -> float:
        return float(self._log_lik_x(x))

    # -- latent block ------------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        return self._ycenter + (self.sigma_x + self.sigma_y) * rng.standard_normal()

    def draw_x_prior(self, theta, rng):
        if self.direction == "cauchy-obs":
            return theta + self.sigma_x * rng.standard_normal()
        return _cauchy_draw(rng, theta, self.sigma_x)

    def initial_latent(self, theta, rng):
        # start the level at its conditional, not the prior, so runs launched
        # far from the data begin with the working coordinates in equilibrium
        return self.draw_x_exact(theta, None, rng)

    def _likelihood_width(self) -> float:
        if self.direction == "cauchy-obs":
            return self.sigma_y
        return self.sigma_y / math.sqrt(self.n)

    def _x_density(self, theta) -> GridDensity:
        w = self._likelihood_width()
        prior_bump = np.linspace(theta - 14.0 * self.sigma_x, theta + 14.0 * self.sigma_x,
                                 _GRID_HALF_POINTS)
        data_bump = np.linspace(self._ycenter - 12.0 * w, self._ycenter + 12.0 * w,
                                _GRID_HALF_POINTS)
        grid = np.union1d(prior_bump, data_bump)
        logv = self._log_prior_x(grid, theta) + self._log_lik_x(grid)
        return GridDensity(grid, logv)

    def draw_x_exact(self, theta, x, rng):
        return self._x_density(theta).sample(rng)

    def x_conditional_cdf(self, theta, x, i, v):
        return self._x_density(theta).cdf(v)

    # -- parameter block -----------------------------------------------------------

    def _theta_density(self, xstar) -> GridDensity:
        """Conditional of theta given a noncentered deviation, cauchy-obs side.

        The target is a product of Cauchy terms centered at y_i - xstar; its
        polynomial tails need a tan-warped grid to reach coverage.
        """
        centers = self.y - float(xstar)
        c0 = float(np.median(centers))
        spread = float(np.max(centers) - np.min(centers)) + self.sigma_y
        reach = math.atan(1e7 / spread)
        warp = np.tan(np.linspace(-reach, reach, 4097))
        grid = c0 + spread * warp
        logv = np.sum(_cauchy_logpdf(grid[None, :] - centers[:, None], self.sigma_y), axis=0)
        return GridDensity(grid, logv)

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            if self.direction == "cauchy-obs":
                return float(xstar) + self.sigma_x * rng.standard_normal()
            return _cauchy_draw(rng, float(xstar), self.sigma_x)
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        if self.direction == "cauchy-latent":
            m = self._ybar - float(xstar)
            return m + self.sigma_y / math.sqrt(self.n) * rng.standard_normal()
        if self.n == 1:
            return _cauchy_draw(rng, float(self.y[0]) - float(xstar), self.sigma_y)
        return self._theta_density(xstar).sample(rng)

    def log_theta_conditional(self, p, xstar, theta):
        if p == CENTERED:
            if self.direction == "cauchy-obs":
                return -0.5 * (theta - float(xstar)) ** 2 / self.sigma_x**2
            return float(_cauchy_logpdf(theta - float(xstar), self.sigma_x))
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        if self.direction == "cauchy-latent":
            return -0.5 * self.n * (theta - (self._ybar - float(xstar))) ** 2 / self.sigma_y**2
        dev = self.y - float(xstar) - theta
        return float(np.sum(_cauchy_logpdf(dev, self.sigma_y)))

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED and self.direction == "cauchy-obs":
            return self.sigma_x**2
        if p == NONCENTERED and self.direction == "cauchy-latent":
            return self.sigma_y**2 / self.n
        # the Cauchy-side conditional has no second moment
        return super().theta_conditional_variance(p, xstar)

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.asarray(t, dtype=float)
        if p == CENTERED:
            if self.direction == "cauchy-obs":
                return ndtr((t - float(xstar)) / self.sigma_x)
            return _cauchy_cdf(t - float(xstar), self.sigma_x)
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        if self.direction == "cauchy-latent":
            m = self._ybar - float(xstar)
            return ndtr((t - m) * math.sqrt(self.n) / self.sigma_y)
        if self.n == 1:
            return _cauchy_cdf(t - (float(self.y[0]) - float(xstar)), self.sigma_y)
        return self._theta_density(xstar).cdf(t)

    def conditional_x_mode(self, theta: float) -> float:
        """Mode of the latent conditional, by Newton from the parameter side."""
        x = float(theta)
        for _ in range(200):
            if self.direction == "cauchy-obs":
                g = -(x - theta) / self.sigma_x**2
                h = -1.0 / self.sigma_x**2
                d = x - self.y
                g -= np.sum(2.0 * d / (self.sigma_y**2 + d * d))
                h -= np.sum(2.0 * (self.sigma_y**2 - d * d) / (self.sigma_y**2 + d * d) ** 2)
            else:
                d = x - theta
                g = -2.0 * d / (self.sigma_x**2 + d * d)
                h = -2.0 * (self.sigma_x**2 - d * d) / (self.sigma_x**2 + d * d) ** 2
                g -= self.n * (x - self._ybar) / self.sigma_y**2
                h -= self.n / self.sigma_y**2
            if h >= 0.0:  # inflection region: fall back to a damped ascent
                h = -max(1.0 / self.sigma_x**2, self.n / self.sigma_y**2)
            step = g / h
            x -= step
            if abs(step) < 1e-12:
                break
        return x


def figure_surface(model: HeavyTailHmmModel, lo: float = -40.0, hi: float = 40.0,
                   step: float = 0.25):
    """Joint log density of (latent, parameter) on a square grid.

    Returns (axis, surface) with surface[i, j] = log p(x = axis[i],
    theta = axis[j], y) up to a constant.
    """
    axis = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    lik = model._log_lik_x(axis)
    dev = axis[:, None] - axis[None, :]
    if model.direction == "cauchy-obs":
        prior = -0.5 * np.square(dev) / model.sigma_x**2
    else:
        prior = _cauchy_logpdf(dev, model.sigma_x)
    return axis, prior + lik[:, None]


def build_heavy_tail_hmm(params: dict, y, direction: str = "cauchy-obs") -> HeavyTailHmmModel:
    return HeavyTailHmmModel(y, direction=direction, **params)
