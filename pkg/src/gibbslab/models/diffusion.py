"""Driftless diffusion with unknown volatility, observed exactly at the end.

The path X(t) = theta * B(t) starts at zero and the single observation is
y = X(t1) with no noise. On an n-point grid t_i = i * delta the latent block
is the path interior; the endpoint is pinned to the data. The prior on theta
is flat on (0, theta_max]: a bound is needed because the data-based working
coordinates carry no quadratic variation, leaving a parameter conditional
proportional to 1/theta, which has a divergent integral on (0, inf).

Parametrizations:

  centered     path kept as is; theta | path is a truncated inverse-root
               gamma read off the quadratic variation (exact transform draw)
  noncentered  pure rescaling x / theta; incompatible with the exactly
               observed endpoint, so its parameter update refuses to run
  data_based   "bridge": working path is a standard Brownian motion whose
               endpoint is resampled on the way in; theta | x*, y collapses
               to the marginal posterior and decouples the blocks
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaincc, gammainccinv, ndtr

from ..engine import GridDensity
from ..errors import (
    ConstraintViolationError,
    InvalidParameterError,
    UnsupportedParametrizationError,
)
from ..model import GibbsModel
from ..reparam import CENTERED, NONCENTERED, Parametrization, Reparametrization, identity_reparam
from ..rng import RngStream

__all__ = ["ObservedDiffusionModel", "build_observed_diffusion", "BRIDGE"]

BRIDGE = Parametrization.data_based("bridge")


class ObservedDiffusionModel(GibbsModel):
    name = "observed_diffusion"
    x_sites_independent = False

    def __init__(self, y, n: int, t1: float = 1.0, theta_max: float = 10.0):
        super().__init__()
        if n < 2:
            raise InvalidParameterError("need at least two grid increments")
        if not t1 > 0:
            raise InvalidParameterError("time horizon must be positive")
        if not theta_max > 0:
            raise InvalidParameterError("prior bound must be positive")
        self.y = float(y)
        self.n = int(n)
        self.t1 = float(t1)
        self.theta_max = float(theta_max)
        self.delta = self.t1 / self.n
        self._ratio = np.arange(1, self.n) / self.n  # t_i / t1 for the interior
        self._posterior: GridDensity | None = None

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 1.0, data_seed: int = 0,
                   t1: float = 1.0, theta_max: float = 10.0):
        if not 0 < theta_star <= theta_max:
            raise InvalidParameterError("theta_star must lie in the prior support")
        rng = RngStream(data_seed, 0)
        y = theta_star * math.sqrt(t1) * rng.standard_normal()
        return cls(y, n=n, t1=t1, theta_max=theta_max)

    def theta_support(self):
        return (0.0, self.theta_max)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED, BRIDGE)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return Reparametrization(
                name="path_scale",
                forward=lambda xstar, theta, y: theta * np.asarray(xstar, dtype=float),
                conditional_inverse=lambda x, theta, y, rng:
                    np.asarray(x, dtype=float) / theta,
            )
        if p == BRIDGE:
            return Reparametrization(
                name="bridge_standardized",
                forward=self._bridge_forward,
                conditional_inverse=self._bridge_inverse,
            )
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def _bridge_forward(self, xstar, theta, y):
        xs = np.asarray(xstar, dtype=float)
        return theta * (xs[:-1] - self._ratio * xs[-1]) + self._ratio * self.y

    def _bridge_inverse(self, x, theta, y, rng):
        # the endpoint of the working path is unidentified from (x, theta):
        # resample it, which is exactly the conditional draw the sweep needs
        end = math.sqrt(self.t1) * rng.standard_normal()
        interior = (np.asarray(x, dtype=float) - self._ratio * self.y) / theta
        return np.concatenate((interior + self._ratio * end, [end]))

    # -- latent block ---------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        base = abs(self.y) / math.sqrt(self.t1)
        if base == 0.0:
            base = 0.3 * self.theta_max
        t = base * math.exp(0.5 * rng.standard_normal())
        return min(max(t, 1e-3 * self.theta_max), self.theta_max)

    def draw_x_prior(self, theta, rng):
        w = math.sqrt(self.delta) * np.cumsum(rng.standard_normal(self.n - 1))
        return theta * w

    def initial_latent(self, theta, rng):
        return self.draw_x_exact(theta, None, rng)

    def draw_x_exact(self, theta, x, rng):
        """Bridge from (0, 0) to (t1, y) with volatility theta."""
        w = math.sqrt(self.delta) * np.cumsum(rng.standard_normal(self.n))
        bridge = w[:-1] - self._ratio * w[-1]
        return self._ratio * self.y + theta * bridge

    def x_conditional_cdf(self, theta, x, i, v):
        x = np.asarray(x, dtype=float)
        left = 0.0 if i == 0 else x[i - 1]
        right = self.y if i == self.n - 2 else x[i + 1]
        m = 0.5 * (left + right)
        sd = theta * math.sqrt(self.delta / 2.0)
        return ndtr((np.asarray(v, dtype=float) - m) / sd)

    # -- parameter block ----------------------------------------------------------

    def _quadratic_sum(self, x) -> float:
        full = np.concatenate(([0.0], np.asarray(x, dtype=float), [self.y]))
        d = np.diff(full)
        return float(d @ d)

    def _shape(self) -> float:
        return 0.5 * (self.n - 1)

    def has_exact_theta(self, p):
        return True

    def _posterior_density(self) -> GridDensity:
        """Marginal posterior of theta given only the endpoint observation."""
        if self._posterior is None:
            lo = abs(self.y) / math.sqrt(1400.0 * self.t1)
            lo = min(max(lo, 1e-9), 0.5 * self.theta_max)
            grid = np.linspace(lo, self.theta_max, 8192)
            logv = -np.log(grid) - self.y**2 / (2.0 * grid * grid * self.t1)
            self._posterior = GridDensity(grid, logv, closed=(False, True))
        return self._posterior

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            s = self._quadratic_sum(xstar)
            k = self._shape()
            w_min = s / (2.0 * self.delta * self.theta_max**2)
            w = gammainccinv(k, rng.open_unit() * gammaincc(k, w_min))
            return math.sqrt(s / (2.0 * self.delta * w))
        if p == NONCENTERED:
            raise ConstraintViolationError(
                "pure rescaling cannot keep the exactly observed endpoint fixed: "
                "the working path is not a priori independent of the volatility"
            )
        if p != BRIDGE:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        return self._posterior_density().sample(rng)

    def log_theta_conditional(self, p, xstar, theta):
        if not 0.0 < theta <= self.theta_max:
            return -np.inf
        if p == CENTERED:
            s = self._quadratic_sum(xstar)
            return -self.n * math.log(theta) - s / (2.0 * self.delta * theta * theta)
        if p == NONCENTERED:
            raise ConstraintViolationError(
                "pure rescaling cannot keep the exactly observed endpoint fixed: "
                "the working path is not a priori independent of the volatility"
            )
        if p != BRIDGE:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        return -math.log(theta) - self.y**2 / (2.0 * theta * theta * self.t1)

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED:
            k = self._shape()
            if self.n < 4:
                return np.inf
            s = self._quadratic_sum(xstar)
            w_min = s / (2.0 * self.delta * self.theta_max**2)
            z = gammaincc(k, w_min)
            m1 = math.exp(math.lgamma(k - 0.5) - math.lgamma(k)) * gammaincc(k - 0.5, w_min) / z
            m2 = math.exp(math.lgamma(k - 1.0) - math.lgamma(k)) * gammaincc(k - 1.0, w_min) / z
            c = s / (2.0 * self.delta)
            return c * (m2 - m1 * m1)
        if p == BRIDGE:
            d = self._posterior_density()
            mu = d.mean()
            w0, w1, x0 = d.w[:-1], d.w[1:], d.grid[:-1]
            h = d.h
            # exact second moment of each linear piece
            m2 = (x0**2 * (w0 + w1) / 2.0 + x0 * h * (w0 + 2.0 * w1) / 3.0
                  + h * h * (w0 + 3.0 * w1) / 12.0)
            return float(np.sum(m2 * h) / d.total) - mu * mu
        return super().theta_conditional_variance(p, xstar)

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.asarray(t, dtype=float)
        if p == CENTERED:
            s = self._quadratic_sum(xstar)
            k = self._shape()
            w_min = s / (2.0 * self.delta * self.theta_max**2)
            with np.errstate(divide="ignore"):
                w_t = s / (2.0 * self.delta * np.square(np.maximum(t, 1e-300)))
            out = gammaincc(k, np.maximum(w_t, w_min)) / gammaincc(k, w_min)
            return np.where(t <= 0, 0.0, np.minimum(out, 1.0))
        if p != BRIDGE:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        return self._posterior_density().cdf(t)

    def theta_posterior_cdf(self, t):
        return self._posterior_density().cdf(t)

    def log_joint(self, x, theta) -> float:
        if not 0.0 < theta <= self.theta_max:
            return -np.inf
        s = self._quadratic_sum(x)
        return -self.n * math.log(theta) - s / (2.0 * self.delta * theta * theta)


def build_observed_diffusion(params: dict, y) -> ObservedDiffusionModel:
    return ObservedDiffusionModel(y, **params)
