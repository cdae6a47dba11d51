"""Latent Poisson process observed through an exact point count.

The parameter is the area of a window of a unit-rate Poisson process and the
observation is the exact number of points inside it; theta ~ Gamma(alpha,
beta) a priori, so theta | count is Gamma(alpha + count, beta + 1) and the
chain has a conjugate oracle.

Two noncentered constructions carry the process:

  rectangle  points (u_i, v_i) on [0, 1] x [0, inf); the window is v <= theta
  scaling    arrival coordinates on [0, inf); the window is u <= theta and
             the natural points are u_i / theta

Either way the working latent is the process itself, simulated lazily: the
store realizes points only up to a ceiling and extends by fresh unit-rate
slabs when a parameter proposal looks higher. Points below the ceiling are
never resimulated by the parameter block, so their identities are stable
across Metropolis steps; the latent block's conditional refresh redraws the
window and hands the region above it back to the unrealized pool.
"""

from __future__ import annotations

import math

import numpy as np

from ..engine import RandomWalkMH
from ..errors import (
    InvalidConstructionError,
    InvalidParameterError,
    StoreCorruptionError,
    UnsupportedParametrizationError,
)
from ..model import GibbsModel
from ..reparam import NONCENTERED, Parametrization, Reparametrization
from ..rng import RngStream
from scipy.special import gammainc

__all__ = ["LazyPointStore", "LatentPoissonModel", "build_latent_poisson"]

_CONSTRUCTIONS = ("rectangle", "scaling")


class LazyPointStore:
    """Unit-rate Poisson points realized lazily up to a moving ceiling."""

    def __init__(self, construction: str, rng: RngStream):
        if construction not in _CONSTRUCTIONS:
            raise InvalidConstructionError(
                f"unknown construction {construction!r}, expected one of {_CONSTRUCTIONS}"
            )
        self.construction = construction
        self.rng = rng
        self.positions = np.empty(0)
        self.marks = np.empty(0)
        self.ceiling = 0.0

    def ensure(self, t: float) -> None:
        """Realize the process on (ceiling, t]; no-op when already covered."""
        t = float(t)
        if t <= self.ceiling:
            return
        width = t - self.ceiling
        k = int(self.rng.poisson(width))
        if k:
            fresh = self.ceiling + width * np.sort(self.rng.open_unit(size=k))
            self.positions = np.concatenate((self.positions, fresh))
            self.marks = np.concatenate((self.marks, self.rng.open_unit(size=k)))
        self.ceiling = t

    def count(self, q: float) -> int:
        if q > self.ceiling:
            raise StoreCorruptionError(
                f"count queried at {q} above the realized ceiling {self.ceiling}"
            )
        return int(np.searchsorted(self.positions, q, side="right"))

    def refresh(self, theta: float, n_obs: int) -> None:
        """Conditional redraw of the realized process given the observed count.

        The window is replaced by n_obs sorted uniforms; the region above
        theta returns to the unrealized pool (its law is free of the data, so
        lazily resimulating it later is the same conditional draw). Keeping
        old points above theta instead would wall the parameter in: a retained
        point just above the window could never be crossed again.
        """
        theta = float(theta)
        self.positions = theta * np.sort(self.rng.open_unit(size=n_obs))
        self.marks = self.rng.open_unit(size=n_obs)
        self.ceiling = theta

    def points_below(self, q: float) -> np.ndarray:
        return self.positions[: self.count(q)].copy()

    def natural_points(self, theta: float):
        """Window points in natural coordinates on [0, 1]."""
        k = self.count(theta)
        if self.construction == "rectangle":
            return self.marks[:k].copy()
        return self.positions[:k] / theta


class LatentPoissonModel(GibbsModel):
    name = "latent_poisson"

    def __init__(self, n_obs: int, alpha: float = 1.0, beta: float = 1.0,
                 construction: str = "rectangle"):
        super().__init__()
        if construction not in _CONSTRUCTIONS:
            raise InvalidConstructionError(
                f"unknown construction {construction!r}, expected one of {_CONSTRUCTIONS}"
            )
        if n_obs < 0 or int(n_obs) != n_obs:
            raise InvalidParameterError("observed count must be a nonnegative integer")
        if not (alpha > 0 and beta > 0):
            raise InvalidParameterError("prior shape and rate must be positive")
        self.n_obs = int(n_obs)
        self.y = float(n_obs)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.construction = construction

    @classmethod
    def synthesize(cls, theta_star: float = 4.0, data_seed: int = 0, **kwargs):
        if theta_star <= 0:
            raise InvalidParameterError("theta_star must be positive")
        rng = RngStream(data_seed, 0)
        return cls(int(rng.poisson(theta_star)), **kwargs)

    def theta_support(self):
        return (0.0, np.inf)

    def supported_parametrizations(self):
        return (NONCENTERED,)

    def reparam(self, p: Parametrization):
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        return Reparametrization(
            name="lazy_point_store",
            forward=lambda store, theta, y: store.natural_points(theta),
            conditional_inverse=lambda x, theta, y, rng: x,
            xstar_prior=None,
        )

    def latent_update_modes(self, p):
        return ("direct",)

    def initial_theta(self, rng: RngStream) -> float:
        return rng.gamma(self.alpha + self.n_obs, 1.0 / (self.beta + 1.0))

    def initial_xstar(self, p, theta, rng):
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        store = LazyPointStore(self.construction, rng.substream(1009))
        store.refresh(theta, self.n_obs)
        return store

    def update_xstar_direct(self, p, theta, xstar, rng):
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        xstar.refresh(theta, self.n_obs)
        return xstar

    def default_theta_update(self, p):
        # 0.6 x the posterior-sd hint with three tries per iteration keeps the
        # walk inside the Gamma bulk; wider steps stall against count changes
        return RandomWalkMH(step_sd=0.6 * self.theta_step_hint(), repeats=3)

    def theta_step_hint(self) -> float:
        return math.sqrt(self.alpha + self.n_obs) / (self.beta + 1.0)

    def log_theta_conditional(self, p, xstar, theta):
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        if theta <= 0:
            return -np.inf
        xstar.ensure(theta)
        if xstar.count(theta) != self.n_obs:
            return -np.inf
        return (self.alpha - 1.0) * math.log(theta) - self.beta * theta

    def theta_posterior_cdf(self, t):
        t = np.asarray(t, dtype=float)
        return gammainc(self.alpha + self.n_obs, (self.beta + 1.0) * np.maximum(t, 0.0))

    def functionals(self):
        return {
            "realized_points": lambda theta, s: float(s.positions.size),
            "store_ceiling": lambda theta, s: float(s.ceiling),
        }


def build_latent_poisson(params: dict, n_obs: int) -> LatentPoissonModel:
    return LatentPoissonModel(n_obs, **params)
