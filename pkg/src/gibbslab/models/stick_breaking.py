"""Stick proportions with a gamma-distributed concentration and no data.

Each of n sticks X_i | Theta ~ Beta(1, Theta) independently, with
Theta ~ Gamma(a, b) (rate parametrization). Nothing is observed, so the
target for the parameter chain is simply the prior: the model isolates
how the two parametrizations mix when the latent block alone couples
the blocks.

  centered     theta | x ~ Gamma(a + n, b - sum log(1 - x_i)); the chain
               slows as sticks accumulate
  noncentered  the survival map x~ = (1 - x)^theta makes the working
               coordinates iid Uniform(0, 1), so theta | x~ is the prior
               and consecutive draws are independent
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc

from ..distributions import Uniform
from ..errors import InvalidParameterError, UnsupportedParametrizationError
from ..model import GibbsModel
from ..reparam import CENTERED, NONCENTERED, Parametrization, Reparametrization, identity_reparam
from ..rng import RngStream

__all__ = ["StickBreakingModel", "build_stick_breaking"]

# Beta(1, theta) puts no mass at the right endpoint, but float draws can
# round onto it when theta is tiny, which would blow up the log terms
_ONE_BELOW = float(np.nextafter(1.0, 0.0))


def _survival_forward(xstar, theta, y):
    xs = np.clip(np.asarray(xstar, dtype=float), 1e-300, 1.0)
    return np.minimum(-np.expm1(np.log(xs) / theta), _ONE_BELOW)


def _survival_inverse(x, theta, y, rng):
    x = np.asarray(x, dtype=float)
    return np.exp(theta * np.log1p(-x))


class StickBreakingModel(GibbsModel):
    name = "stick_breaking"

    def __init__(self, n: int, a: float = 2.0, b: float = 1.0):
        super().__init__()
        if n < 1:
            raise InvalidParameterError("need at least one stick")
        if not (a > 0 and b > 0):
            raise InvalidParameterError("gamma prior needs positive shape and rate")
        self.n = int(n)
        self.a = float(a)
        self.b = float(b)

    def theta_support(self):
        return (0.0, np.inf)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return Reparametrization(
                name="stick_survival",
                forward=_survival_forward,
                conditional_inverse=_survival_inverse,
                xstar_prior=Uniform(0.0, 1.0),
            )
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    # -- latent block ---------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        return float(rng.gamma(self.a, 1.0 / self.b))

    def draw_x_prior(self, theta, rng):
        return np.minimum(rng.beta(1.0, theta, self.n), _ONE_BELOW)

    def draw_x_exact(self, theta, x, rng):
        # no observation: the latent conditional is the prior itself
        return self.draw_x_prior(theta, rng)

    def x_site_log_targets(self, theta, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = math.log(theta) + (theta - 1.0) * np.log1p(-x)
        return np.where((x < 0) | (x >= 1), -np.inf, out)

    def x_conditional_cdf(self, theta, x, i, v):
        v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return -np.expm1(theta * np.log1p(-v))

    # -- parameter block ----------------------------------------------------------

    def _cp_rate(self, x) -> float:
        return self.b - float(np.sum(np.log1p(-np.asarray(x, dtype=float))))

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            return float(rng.gamma(self.a + self.n, 1.0 / self._cp_rate(xstar)))
        if p == NONCENTERED:
            return float(rng.gamma(self.a, 1.0 / self.b))
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def log_theta_conditional(self, p, xstar, theta):
        if theta <= 0:
            return -np.inf
        if p == CENTERED:
            return (self.a + self.n - 1.0) * math.log(theta) - self._cp_rate(xstar) * theta
        if p == NONCENTERED:
            return (self.a - 1.0) * math.log(theta) - self.b * theta
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED:
            return (self.a + self.n) / self._cp_rate(xstar) ** 2
        if p == NONCENTERED:
            return self.a / self.b**2
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if p == CENTERED:
            return gammainc(self.a + self.n, self._cp_rate(xstar) * t)
        if p == NONCENTERED:
            return gammainc(self.a, self.b * t)
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    def theta_posterior_cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return gammainc(self.a, self.b * t)

    def log_joint(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        if theta <= 0 or np.any((x < 0) | (x >= 1)):
            return -np.inf
        log_prior = (self.a - 1.0) * math.log(theta) - self.b * theta
        return log_prior + self.n * math.log(theta) + (theta - 1.0) * float(
            np.sum(np.log1p(-x)))

    def functionals(self):
        # ergodic mean b / (a - 1) when a > 1: each term is Exp(theta) in
        # disguise, so its conditional mean is 1 / theta
        return {"stick_rate": lambda theta, x: -float(np.mean(np.log1p(-x)))}


def build_stick_breaking(params: dict) -> StickBreakingModel:
    return StickBreakingModel(**params)
