"""Scaled random-walk volatility path observed through one aggregate draw.

The latent path starts at zero and takes n Gaussian increments of variance
theta^2 * delta; the single observation is y | X ~ N(0, delta * sum_i
exp(X_i)). The parameter prior is flat on (0, theta_max]: a single
observation leaves a 1/theta tail in the marginal likelihood, so the
unbounded flat prior has no proper posterior to sample from.

Centered, theta is identified by the path's quadratic variation S =
sum (X_i - X_{i-1})^2: with w = S / (2 delta theta^2) the conditional is
Gamma((n-1)/2, 1) restricted to w >= S / (2 delta theta_max^2), an exact
inverse-CDF draw. Noncentered, the increments are rescaled to unit variance
and theta moves by random-walk Metropolis against the observation density.

The path block updates sitewise: one random-walk Metropolis touch per site
per sweep against the increment prior times the likelihood, with the
exponential sum tracked incrementally so a whole pass costs O(n).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.integrate import quad
from scipy.special import gammaincc, gammainccinv

from ..engine import RandomWalkMH, SingleSiteMH
from ..errors import (
    InvalidParameterError,
    NonfiniteTargetError,
    UnsupportedParametrizationError,
)
from ..model import GibbsModel
from ..reparam import (
    CENTERED,
    NONCENTERED,
    Parametrization,
    Reparametrization,
    identity_reparam,
)
from ..distributions import Normal
from ..rng import RngStream

__all__ = ["DiscretizedSvModel", "build_discretized_sv"]


@njit(cache=True)
def _sitewise_pass(x, e, total, zs, us, half_y2, half_prec):
    """One left-to-right Metropolis sweep; mutates x and e in place."""
    n = x.shape[0]
    log_total = math.log(total)
    accepted = 0
    for i in range(n):
        xi = x[i]
        v = xi + zs[i]
        left = x[i - 1] if i > 0 else 0.0
        dp = (v - left) ** 2 - (xi - left) ** 2
        if i + 1 < n:
            r = x[i + 1]
            dp += (r - v) ** 2 - (r - xi) ** 2
        if v > 700.0:
            continue  # exp overflow: zero observation density there
        en = math.exp(v)
        t2 = total - e[i] + en
        if not t2 > 0.0:
            continue
        lt2 = math.log(t2)
        gain = -0.5 * (lt2 - log_total) + half_y2 * (1.0 / total - 1.0 / t2)
        if us[i] < gain - half_prec * dp:
            x[i] = v
            e[i] = en
            total = t2
            log_total = lt2
            accepted += 1
    return total, accepted


class DiscretizedSvModel(GibbsModel):
    name = "discretized_sv"
    x_sites_independent = False

    def __init__(self, y, n: int, t1: float = 1.0, theta_max: float = 4.0):
        super().__init__()
        if n < 2:
            raise InvalidParameterError(
                "need at least two increments for a proper volatility conditional"
            )
        if not t1 > 0:
            raise InvalidParameterError("time horizon must be positive")
        if not theta_max > 0:
            raise InvalidParameterError("prior bound theta_max must be positive")
        self.y = float(y)
        self.n = int(n)
        self.t1 = float(t1)
        self.delta = self.t1 / self.n
        self.theta_max = float(theta_max)

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 1.0, data_seed: int = 0,
                   t1: float = 1.0, theta_max: float = 4.0):
        if theta_star <= 0:
            raise InvalidParameterError("theta_star must be positive")
        rng = RngStream(data_seed, 0)
        delta = t1 / n
        x = theta_star * math.sqrt(delta) * np.cumsum(rng.standard_normal(n))
        v = delta * float(np.sum(np.exp(x)))
        return cls(math.sqrt(v) * rng.standard_normal(), n=n, t1=t1,
                   theta_max=theta_max)

    def theta_support(self):
        return (0.0, self.theta_max)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            rt = math.sqrt(self.delta)
            return Reparametrization(
                name="unit_increments",
                forward=lambda xstar, theta, y: theta * rt * np.cumsum(xstar),
                conditional_inverse=lambda x, theta, y, rng:
                    np.diff(x, prepend=0.0) / (theta * rt),
                xstar_prior=Normal(0.0, 1.0),
            )
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    # -- latent block -------------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        return self.theta_max * rng.open_unit()

    def draw_x_prior(self, theta, rng):
        return theta * math.sqrt(self.delta) * np.cumsum(rng.standard_normal(self.n))

    def x_prior_mean(self, theta):
        return 0.0

    def x_step_hint(self, theta) -> float:
        # site conditional given its neighbors has sd theta*sqrt(delta/2)
        return 1.7 * theta * math.sqrt(self.delta)

    def log_likelihood_x(self, x, theta) -> float:
        with np.errstate(over="ignore"):
            v = self.delta * float(np.sum(np.exp(np.asarray(x, dtype=float))))
        # v can overflow (path far above zero) or underflow to 0 (far below);
        # either way the observation density vanishes, so reject.
        if not np.isfinite(v) or v <= 0.0:
            return -np.inf
        return -0.5 * math.log(v) - 0.5 * self.y**2 / v

    def default_x_update(self, p):
        return SingleSiteMH()

    def sitewise_x_update(self, theta, x, step_sd, repeats, rng):
        """One Metropolis touch per site, likelihood tracked incrementally."""
        x = np.array(x, dtype=float, copy=True)
        n = x.size
        e = np.exp(x)
        total = float(e.sum())
        if not total > 0.0:
            raise NonfiniteTargetError("path exponential sum underflowed to zero")
        half_y2 = 0.5 * self.y**2 / self.delta
        half_prec = 1.0 / (2.0 * theta * theta * self.delta)
        accepted = 0
        for _ in range(repeats):
            zs = step_sd * rng.standard_normal(n)
            us = np.log(rng.open_unit(n))
            total, acc = _sitewise_pass(x, e, total, zs, us, half_y2, half_prec)
            accepted += acc
        return x, accepted, n * repeats

    def quadratic_variation(self, x) -> float:
        d = np.diff(np.asarray(x, dtype=float), prepend=0.0)
        return float(d @ d) / self.t1

    # -- parameter block ------------------------------------------------------------

    def _shape(self) -> float:
        return 0.5 * (self.n - 1)

    def _w_floor(self, s: float) -> float:
        # prior bound theta <= theta_max translates to w >= this
        return s / (2.0 * self.delta * self.theta_max**2)

    def has_exact_theta(self, p):
        return p == CENTERED

    def default_theta_update(self, p):
        return None if p == CENTERED else RandomWalkMH()

    def draw_theta_exact(self, p, xstar, rng):
        if p != CENTERED:
            return super().draw_theta_exact(p, xstar, rng)
        s = self.quadratic_variation(xstar) * self.t1
        a = self._shape()
        tail = float(gammaincc(a, self._w_floor(s)))
        if tail <= 0.0:
            return self.theta_max  # whole conditional mass sits at the bound
        w = float(gammainccinv(a, rng.open_unit() * tail))
        return math.sqrt(s / (2.0 * self.delta * w))

    def log_theta_conditional(self, p, xstar, theta):
        if theta <= 0 or theta > self.theta_max:
            return -np.inf
        if p == CENTERED:
            s = self.quadratic_variation(xstar) * self.t1
            return -self.n * math.log(theta) - s / (2.0 * self.delta * theta * theta)
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        rt = math.sqrt(self.delta)
        x = theta * rt * np.cumsum(np.asarray(xstar, dtype=float))
        return self.log_likelihood_x(x, theta)

    def _trunc_moment(self, s: float, k: int) -> float:
        """E[theta^k] under the truncated conditional, c = s/(2 delta)."""
        a = self._shape()
        c = s / (2.0 * self.delta)
        w0 = self._w_floor(s)
        b = a - 0.5 * k
        if b > 0:
            num = math.exp(math.lgamma(b) - math.lgamma(a)) * float(gammaincc(b, w0))
            den = float(gammaincc(a, w0))
        else:
            # n <= 3: the gamma-function route degenerates; integrate directly
            num, _ = quad(lambda w: w ** (b - 1.0) * math.exp(-w), w0, np.inf)
            den, _ = quad(lambda w: w ** (a - 1.0) * math.exp(-w), w0, np.inf)
            num /= math.gamma(a)
            den /= math.gamma(a)
        if den <= 0.0:
            return self.theta_max**k
        return c ** (0.5 * k) * num / den

    def theta_conditional_variance(self, p, xstar):
        if p != CENTERED:
            return super().theta_conditional_variance(p, xstar)
        s = self.quadratic_variation(xstar) * self.t1
        m1 = self._trunc_moment(s, 1)
        m2 = self._trunc_moment(s, 2)
        return m2 - m1 * m1

    def theta_conditional_cdf(self, p, xstar, t):
        if p != CENTERED:
            return super().theta_conditional_cdf(p, xstar, t)
        s = self.quadratic_variation(xstar) * self.t1
        a = self._shape()
        w0 = self._w_floor(s)
        tail = float(gammaincc(a, w0))
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            arg = s / (2.0 * self.delta * np.square(np.maximum(t, 1e-300)))
        num = gammaincc(a, np.clip(arg, w0, 1e300))
        out = np.where(t > 0, num / max(tail, 1e-300), 0.0)
        return np.clip(out, 0.0, 1.0)

    def log_joint(self, x, theta) -> float:
        if theta <= 0 or theta > self.theta_max:
            return -np.inf
        x = np.asarray(x, dtype=float)
        s = self.quadratic_variation(x) * self.t1
        out = -self.n * math.log(theta) - s / (2.0 * self.delta * theta * theta)
        return out + self.log_likelihood_x(x, theta)

    def functionals(self):
        return {"quadratic_variation": lambda theta, x: self.quadratic_variation(x)}


def build_discretized_sv(params: dict, y) -> DiscretizedSvModel:
    return DiscretizedSvModel(y, **params)
