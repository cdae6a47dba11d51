"""Gaussian Markov random field with a scalar level, partially observed.

The field X on a lattice has a proper conditional-autoregression prior
around the level Theta: X | Theta ~ N(Theta * 1, Q^{-1}) with
Q = 1.05 * deg * I - A for adjacency A (4-neighbour, free boundary).
A subset of sites is observed without noise; the latent block is the
complement. Theta itself has a flat prior on the real line, which is
proper to work with because 1' Q 1 > 0 for the proper CAR.

Parametrizations:

  centered     latent sites kept in field coordinates; both conditionals
               are Gaussian and exact
  noncentered  subtracting the level from every site would have to move
               the exactly observed sites too; the parameter conditional
               degenerates, so the update refuses to run
  partial      "hybrid": subtract the level from the latent sites only.
               Theta | x*, y is then the marginal posterior restricted to
               the observed coordinates, which decouples the two blocks.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import ndtr

from ..errors import DegenerateConditionalError, InvalidParameterError, UnsupportedParametrizationError
from ..model import GibbsModel
from ..reparam import CENTERED, NONCENTERED, Parametrization, Reparametrization, identity_reparam
from ..rng import RngStream

__all__ = ["GmrfHybridModel", "build_gmrf_hybrid", "HYBRID", "lattice_precision"]

HYBRID = Parametrization.partial_tagged("hybrid")


def lattice_precision(side: int) -> np.ndarray:
    """Proper CAR precision 1.05 * deg * I - A on a side x side grid."""
    if side < 2:
        raise InvalidParameterError("lattice side must be at least 2")
    m = side * side
    a = np.zeros((m, m))
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                a[i, i + 1] = a[i + 1, i] = 1.0
            if r + 1 < side:
                a[i, i + side] = a[i + side, i] = 1.0
    deg = a.sum(axis=1)
    return 1.05 * np.diag(deg) - a


class GmrfHybridModel(GibbsModel):
    name = "gmrf_hybrid"
    x_sites_independent = False

    def __init__(self, y, side: int, observed: np.ndarray):
        super().__init__()
        observed = np.asarray(observed, dtype=int)
        y = np.asarray(y, dtype=float)
        if observed.ndim != 1 or observed.size == 0:
            raise InvalidParameterError("need at least one observed site")
        if np.unique(observed).size != observed.size:
            raise InvalidParameterError("observed site indices must be distinct")
        q = lattice_precision(side)
        m_total = q.shape[0]
        if np.any((observed < 0) | (observed >= m_total)):
            raise InvalidParameterError("observed site index out of range")
        if observed.size >= m_total:
            raise InvalidParameterError("at least one site must stay latent")
        if y.shape != observed.shape:
            raise InvalidParameterError("one observation per observed site")
        self.y = y
        self.side = int(side)
        self.observed = np.sort(observed)
        mask = np.ones(m_total, dtype=bool)
        mask[self.observed] = False
        self.latent_idx = np.flatnonzero(mask)
        self.m = self.latent_idx.size

        self.q = q
        q_uu = q[np.ix_(self.latent_idx, self.latent_idx)]
        self._q_uo = q[np.ix_(self.latent_idx, self.observed)]
        self._uu_chol = cho_factor(q_uu, lower=True)

        one = np.ones(m_total)
        self._prec_theta_cp = float(one @ q @ one)

        # hybrid coordinates: r = (y, x*) with e marking the observed slots
        e = np.zeros(m_total)
        e[self.observed] = 1.0
        self._e = e
        self._prec_theta_hy = float(e @ q @ e)
        if not self._prec_theta_hy > 0:
            raise InvalidParameterError("observed block carries no precision")

        # marginal posterior of the level given the observed sites only
        sigma = np.linalg.inv(q)
        sig_oo = sigma[np.ix_(self.observed, self.observed)]
        w = np.linalg.solve(sig_oo, np.ones(self.observed.size))
        self._post_prec = float(np.ones(self.observed.size) @ w)
        self._post_mean = float(self.y @ w) / self._post_prec

    @classmethod
    def synthesize(cls, side: int, n_obs: int, theta_star: float = 0.0, data_seed: int = 0):
        m_total = side * side
        if not 1 <= n_obs < m_total:
            raise InvalidParameterError("observed count must leave a latent site")
        rng = RngStream(data_seed, 0)
        q = lattice_precision(side)
        chol = np.linalg.cholesky(q)
        field = theta_star + solve_triangular(
            chol.T, rng.standard_normal(m_total), lower=False)
        keys = rng.open_unit(m_total)
        observed = np.sort(np.argsort(keys)[:n_obs])
        return cls(field[observed], side=side, observed=observed)

    def theta_support(self):
        return (-np.inf, np.inf)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED, HYBRID)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return Reparametrization(
                name="level_shift_latent",
                forward=lambda xstar, theta, y: np.asarray(xstar, dtype=float) + theta,
                conditional_inverse=lambda x, theta, y, rng:
                    np.asarray(x, dtype=float) - theta,
            )
        if p == HYBRID:
            # same map as the pure version; the difference is entirely in
            # which parameter conditional pairs with it
            return Reparametrization(
                name="level_shift_hybrid",
                forward=lambda xstar, theta, y: np.asarray(xstar, dtype=float) + theta,
                conditional_inverse=lambda x, theta, y, rng:
                    np.asarray(x, dtype=float) - theta,
            )
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    # -- latent block ---------------------------------------------------------

    def initial_theta(self, rng: RngStream) -> float:
        return float(np.mean(self.y)) + rng.standard_normal()

    def draw_x_prior(self, theta, rng):
        # prior draw of the latent block alone, marginalizing nothing:
        # conditional on nothing but theta the joint field is N(theta, Q^{-1});
        # the latent sub-block has precision Q_uu only in the conditional, so
        # use the exact marginal via the full-field draw
        q_chol = np.linalg.cholesky(self.q)
        field = theta + solve_triangular(
            q_chol.T, rng.standard_normal(self.q.shape[0]), lower=False)
        return field[self.latent_idx]

    def initial_latent(self, theta, rng):
        return self.draw_x_exact(theta, None, rng)

    def _conditional_mean(self, theta: float) -> np.ndarray:
        rhs = self._q_uo @ (self.y - theta)
        return theta - cho_solve(self._uu_chol, rhs)

    def draw_x_exact(self, theta, x, rng):
        mean = self._conditional_mean(theta)
        z = rng.standard_normal(self.m)
        lower = self._uu_chol[0]
        pert = solve_triangular(lower.T if self._uu_chol[1] else lower,
                                z, lower=False)
        return mean + pert

    def x_conditional_cdf(self, theta, x, i, v):
        x = np.asarray(x, dtype=float)
        q_uu = self.q[np.ix_(self.latent_idx, self.latent_idx)]
        prec = q_uu[i, i]
        mean_all = self._conditional_mean(theta)
        dev = x - mean_all
        dev[i] = 0.0
        m = mean_all[i] - (q_uu[i] @ dev) / prec
        return ndtr((np.asarray(v, dtype=float) - m) * math.sqrt(prec))

    # -- parameter block ----------------------------------------------------------

    def has_exact_theta(self, p):
        return True

    def _theta_law(self, p, xstar):
        if p == CENTERED:
            field = np.zeros(self.q.shape[0])
            field[self.latent_idx] = np.asarray(xstar, dtype=float)
            field[self.observed] = self.y
            mean = float(np.ones_like(field) @ self.q @ field) / self._prec_theta_cp
            return mean, self._prec_theta_cp
        if p == NONCENTERED:
            raise DegenerateConditionalError(
                "a fully noncentered field must carry the observed sites as "
                "y - theta; conditioning on those working coordinates pins the "
                "level to a point mass"
            )
        if p != HYBRID:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        r0 = np.zeros(self.q.shape[0])
        r0[self.latent_idx] = np.asarray(xstar, dtype=float)
        r0[self.observed] = self.y
        mean = float(self._e @ self.q @ r0) / self._prec_theta_hy
        return mean, self._prec_theta_hy

    def draw_theta_exact(self, p, xstar, rng):
        mean, prec = self._theta_law(p, xstar)
        return mean + rng.standard_normal() / math.sqrt(prec)

    def log_theta_conditional(self, p, xstar, theta):
        mean, prec = self._theta_law(p, xstar)
        return -0.5 * prec * (theta - mean) ** 2

    def theta_conditional_variance(self, p, xstar):
        _, prec = self._theta_law(p, xstar)
        return 1.0 / prec

    def theta_conditional_cdf(self, p, xstar, t):
        mean, prec = self._theta_law(p, xstar)
        return ndtr((np.asarray(t, dtype=float) - mean) * math.sqrt(prec))

    def theta_posterior_cdf(self, t):
        return ndtr((np.asarray(t, dtype=float) - self._post_mean)
                    * math.sqrt(self._post_prec))

    def log_joint(self, x, theta) -> float:
        field = np.zeros(self.q.shape[0])
        field[self.latent_idx] = np.asarray(x, dtype=float)
        field[self.observed] = self.y
        dev = field - theta
        return -0.5 * float(dev @ self.q @ dev)

    def data_center(self) -> float:
        return float(np.median(self.y))

    def functionals(self):
        return {"latent_mean": lambda theta, x: float(np.mean(x))}


def build_gmrf_hybrid(params: dict, y) -> GmrfHybridModel:
    return GmrfHybridModel(y, **params)
