"""Gaussian hidden Markov chain with an unknown level.

Latent path x_i = theta + d_i where d is a stationary AR(1) deviation with
autocorrelation rho and marginal standard deviation sigma_x; observations
y_i ~ N(x_i, sigma_y^2); prior theta ~ N(0, 1). The AR deviations give the
latent a tridiagonal precision, so the path conditional is sampled exactly
with banded Cholesky solves in O(n).

A no-data mode (y = None) runs the prior-coupled chain: the observation
terms drop from every conditional and the noncentered parameter update
collapses to an independent prior draw.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from scipy.signal import lfilter
from scipy.special import ndtr

from ..errors import InvalidParameterError, UnsupportedParametrizationError
from ..model import GibbsModel
from ..reparam import (
    CENTERED,
    NONCENTERED,
    Parametrization,
    identity_reparam,
    location_ncp,
)
from ..distributions import Normal
from ..rng import RngStream

__all__ = ["GaussianHmmModel", "build_gaussian_hmm"]


class GaussianHmmModel(GibbsModel):
    name = "gaussian_hmm"

    def __init__(self, y, n=None, rho: float = 0.0, sigma_x: float = 1.0, sigma_y: float = 1.0):
        super().__init__()
        if not (-1.0 < rho < 1.0):
            raise InvalidParameterError(f"need |rho| < 1, got {rho}")
        if not (sigma_x > 0 and sigma_y > 0):
            raise InvalidParameterError("sigma_x and sigma_y must be positive")
        if y is None:
            if n is None or n < 1:
                raise InvalidParameterError("no-data mode needs an explicit chain length")
            self.y = None
            self.n = int(n)
        else:
            self.y = np.atleast_1d(np.asarray(y, dtype=float))
            self.n = int(self.y.size)
            if self.n < 1:
                raise InvalidParameterError("need at least one observation")
        self.rho = float(rho)
        self.sigma_x = float(sigma_x)
        self.sigma_y = float(sigma_y)

        # stationary AR(1) precision: tridiagonal, scaled by the marginal variance
        n_, r = self.n, self.rho
        base = 1.0 / (self.sigma_x**2 * (1.0 - r * r)) if n_ > 1 else 1.0 / self.sigma_x**2
        diag = np.full(n_, base * (1.0 + r * r))
        if n_ > 1:
            diag[0] = diag[-1] = base
        off = np.full(max(n_ - 1, 0), -base * r)
        self._q_diag = diag
        self._q_off = off
        self._q_one = self._q_matvec(np.ones(n_))
        self._one_q_one = float(self._q_one.sum())

        # conditional precision of the path; theta only moves the solve's rhs
        p_diag = diag.copy()
        if self.y is not None:
            p_diag += 1.0 / self.sigma_y**2
        ab = np.zeros((2, n_))
        ab[0, 1:] = off
        ab[1, :] = p_diag
        self._chol = cholesky_banded(ab, lower=False)
        self._p_diag = p_diag

    def _q_matvec(self, v: np.ndarray) -> np.ndarray:
        out = self._q_diag * v
        if self.n > 1:
            out[:-1] += self._q_off * v[1:]
            out[1:] += self._q_off * v[:-1]
        return out

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 0.0, data_seed: int = 0,
                   rho: float = 0.0, sigma_x: float = 1.0, sigma_y: float = 1.0,
                   no_data: bool = False):
        rng = RngStream(data_seed, 0)
        if no_data:
            return cls(None, n=n, rho=rho, sigma_x=sigma_x, sigma_y=sigma_y)
        path = theta_star + _ar1_path(n, rho, sigma_x, rng)
        y = path + sigma_y * rng.standard_normal(n)
        return cls(y, rho=rho, sigma_x=sigma_x, sigma_y=sigma_y)

    # -- parametrizations ------------------------------------------------------

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return location_ncp(Normal(0.0, self.sigma_x))
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    # -- latent block ------------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        if self.y is None:
            return rng.standard_normal()
        return float(self.y.mean()) + rng.standard_normal()

    def draw_x_prior(self, theta, rng):
        return theta + _ar1_path(self.n, self.rho, self.sigma_x, rng)

    def _cond_rhs(self, theta) -> np.ndarray:
        rhs = theta * self._q_one
        if self.y is not None:
            rhs = rhs + self.y / self.sigma_y**2
        return rhs

    def draw_x_exact(self, theta, x, rng):
        mean = cho_solve_banded((self._chol, False), self._cond_rhs(theta))
        z = rng.standard_normal(self.n)
        return mean + solve_banded((0, 1), self._chol, z)

    # -- parameter block -----------------------------------------------------------

    def _theta_law(self, p: Parametrization, xstar):
        if p == CENTERED:
            prec = 1.0 + self._one_q_one
            mean = float(self._q_matvec(np.asarray(xstar, dtype=float)).sum()) / prec
            return mean, math.sqrt(1.0 / prec)
        if p == NONCENTERED:
            if self.y is None:
                return 0.0, 1.0
            prec = 1.0 + self.n / self.sigma_y**2
            mean = float(np.sum(self.y - np.asarray(xstar, dtype=float))) / self.sigma_y**2 / prec
            return mean, math.sqrt(1.0 / prec)
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

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
        x = np.asarray(x, dtype=float)
        rhs = self._cond_rhs(theta)[i]
        if i > 0:
            rhs -= self._q_off[i - 1] * x[i - 1]
        if i < self.n - 1:
            rhs -= self._q_off[i] * x[i + 1]
        m = rhs / self._p_diag[i]
        sd = math.sqrt(1.0 / self._p_diag[i])
        return ndtr((np.asarray(v, dtype=float) - m) / sd)

    def log_joint(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        d = x - theta
        out = -0.5 * theta * theta
        out += -0.5 * float(d @ self._q_matvec(d))
        if self.y is not None:
            out += -0.5 * float(np.sum((self.y - x) ** 2)) / self.sigma_y**2
        return out

    def theta_posterior_cdf(self, t):
        if self.y is None:
            return ndtr(np.asarray(t, dtype=float))
        # integrate the path out: y | theta ~ N(theta 1, sigma_x^2 R + sigma_y^2 I)
        n, r = self.n, self.rho
        cov = self.sigma_x**2 * r ** np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        cov[np.diag_indices(n)] += self.sigma_y**2
        w = np.linalg.solve(cov, np.ones(n))
        prec = 1.0 + float(w.sum())
        mean = float(w @ self.y) / prec
        return ndtr((np.asarray(t, dtype=float) - mean) * math.sqrt(prec))


def _ar1_path(n: int, rho: float, sigma_x: float, rng: RngStream) -> np.ndarray:
    z = rng.standard_normal(n)
    if n == 1 or rho == 0.0:
        return sigma_x * z
    e = z * (math.sqrt(1.0 - rho * rho) * sigma_x)
    e[0] = z[0] * sigma_x  # stationary start
    return lfilter([1.0], [1.0, -rho], e)


def build_gaussian_hmm(params: dict, y) -> GaussianHmmModel:
    return GaussianHmmModel(y, **params)
