"""Two-component mixture with latent class labels.

Each observation comes from component 0 with probability theta, component 1
otherwise; theta ~ U(0, 1). Centered, the labels are independent Bernoulli
sites and theta | labels is Beta. Noncentered, each label is replaced by a
uniform working coordinate thresholded at theta, which turns the parameter
conditional into a piecewise-constant density over the sorted coordinates.

Three component layouts:
  disjoint   f0 = U(0, 1), f1 = U(2, 3); data determine every label
  identical  f0 = f1 = N(0, 1); data carry no label information
  general    f0 = N(0, 1), f1 = N(mu1, 1)
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc

from ..errors import (
    DegenerateSupportError,
    InvalidParameterError,
    InvalidScenarioError,
    UnsupportedParametrizationError,
)
from ..model import GibbsModel
from ..reparam import CENTERED, NONCENTERED, Parametrization, Reparametrization, identity_reparam
from ..distributions import Uniform
from ..rng import RngStream

__all__ = ["ClassificationMixtureModel", "build_classification"]

_SCENARIOS = ("disjoint", "identical", "general")
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _norm_logpdf(y, mean):
    y = np.asarray(y, dtype=float)
    return -0.5 * (y - mean) ** 2 - _LOG_SQRT_2PI


def _unif_logpdf(y, lo, hi):
    y = np.asarray(y, dtype=float)
    inside = (y > lo) & (y < hi)
    return np.where(inside, -math.log(hi - lo), -np.inf)


class ClassificationMixtureModel(GibbsModel):
    name = "classification"
    discrete_latent = True
    latent_values = (0.0, 1.0)

    def __init__(self, y, scenario: str = "general", mu1: float = 2.0):
        super().__init__()
        if scenario not in _SCENARIOS:
            raise InvalidScenarioError(
                f"unknown scenario {scenario!r}, expected one of {_SCENARIOS}"
            )
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.n = int(self.y.size)
        if self.n < 1:
            raise InvalidParameterError("need at least one observation")
        self.scenario = scenario
        self.mu1 = float(mu1)
        self._lf0 = self._logf0(self.y)
        self._lf1 = self._logf1(self.y)
        if np.any(np.isneginf(self._lf0) & np.isneginf(self._lf1)):
            raise DegenerateSupportError(
                "some observation has zero density under both components"
            )

    def _logf0(self, y):
        if self.scenario == "disjoint":
            return _unif_logpdf(y, 0.0, 1.0)
        return _norm_logpdf(y, 0.0)

    def _logf1(self, y):
        if self.scenario == "disjoint":
            return _unif_logpdf(y, 2.0, 3.0)
        if self.scenario == "identical":
            return _norm_logpdf(y, 0.0)
        return _norm_logpdf(y, self.mu1)

    @classmethod
    def synthesize(cls, n: int, theta_star: float = 0.5, data_seed: int = 0,
                   scenario: str = "general", mu1: float = 2.0):
        if not 0.0 < theta_star < 1.0:
            raise InvalidParameterError("theta_star must lie in (0, 1)")
        rng = RngStream(data_seed, 0)
        labels = rng.uniform(size=n) < theta_star
        if scenario == "disjoint":
            y = np.where(labels, rng.uniform(size=n), 2.0 + rng.uniform(size=n))
        elif scenario == "identical":
            y = rng.standard_normal(n)
        elif scenario == "general":
            y = rng.standard_normal(n) + np.where(labels, 0.0, mu1)
        else:
            raise InvalidScenarioError(
                f"unknown scenario {scenario!r}, expected one of {_SCENARIOS}"
            )
        return cls(y, scenario=scenario, mu1=mu1)

    def theta_support(self):
        return (0.0, 1.0)

    def supported_parametrizations(self):
        return (CENTERED, NONCENTERED)

    def reparam(self, p: Parametrization):
        if p == CENTERED:
            return identity_reparam()
        if p == NONCENTERED:
            return Reparametrization(
                name="label_threshold",
                forward=lambda xstar, theta, y: (np.asarray(xstar) <= theta).astype(float),
                conditional_inverse=self._labels_to_uniforms,
                xstar_prior=Uniform(0.0, 1.0),
            )
        raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")

    @staticmethod
    def _labels_to_uniforms(x, theta, y, rng):
        u = rng.open_unit(size=np.asarray(x).shape)
        return np.where(np.asarray(x) > 0.5, theta * u, theta + (1.0 - theta) * u)

    def initial_theta(self, rng: RngStream) -> float:
        return rng.open_unit()

    def draw_x_prior(self, theta, rng):
        return (rng.open_unit(size=self.n) < theta).astype(float)

    def initial_latent(self, theta, rng):
        return self.draw_x_exact(theta, None, rng)

    def _class0_logprob(self, theta):
        a = math.log(theta) + self._lf0
        b = math.log1p(-theta) + self._lf1
        return a - np.logaddexp(a, b)

    def draw_x_exact(self, theta, x, rng):
        lp = self._class0_logprob(theta)
        return (np.log(rng.open_unit(size=self.n)) < lp).astype(float)

    def x_conditional_cdf(self, theta, x, i, v):
        p1 = math.exp(self._class0_logprob(theta)[i])
        v = np.asarray(v, dtype=float)
        return np.where(v < 0.0, 0.0, np.where(v < 1.0, 1.0 - p1, 1.0))

    # -- parameter block --------------------------------------------------------

    def _segments(self, xstar):
        """Piecewise-constant conditional over intervals between sorted coordinates.

        Returns (edges, masses): n+2 edges in [0, 1] and the unnormalized
        probability mass of each of the n+1 segments.
        """
        xs = np.asarray(xstar, dtype=float)
        order = np.argsort(xs)
        edges = np.concatenate(([0.0], xs[order], [1.0]))
        la = self._lf0[order]
        lb = self._lf1[order]
        pre = np.concatenate(([0.0], np.cumsum(la)))
        suf = np.concatenate((np.cumsum(lb[::-1])[::-1], [0.0]))
        levels = pre + suf
        widths = np.diff(edges)
        live = widths > 0
        if not np.any(live & np.isfinite(levels)):
            raise DegenerateSupportError(
                "every threshold segment has zero conditional mass"
            )
        top = np.max(levels[live & np.isfinite(levels)])
        masses = np.where(live, np.exp(levels - top) * widths, 0.0)
        return edges, masses

    def has_exact_theta(self, p):
        return True

    def draw_theta_exact(self, p, xstar, rng):
        if p == CENTERED:
            n1 = float(np.sum(xstar))
            return rng.beta(n1 + 1.0, self.n - n1 + 1.0)
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        edges, masses = self._segments(xstar)
        cum = np.cumsum(masses)
        k = int(np.searchsorted(cum, rng.uniform() * cum[-1], side="right"))
        k = min(k, masses.size - 1)
        return edges[k] + (edges[k + 1] - edges[k]) * rng.open_unit()

    def log_theta_conditional(self, p, xstar, theta):
        if not 0.0 < theta < 1.0:
            return -np.inf
        if p == CENTERED:
            n1 = float(np.sum(xstar))
            return n1 * math.log(theta) + (self.n - n1) * math.log1p(-theta)
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        xs = np.asarray(xstar, dtype=float)
        low = xs <= theta
        return float(np.sum(np.where(low, self._lf0, self._lf1)))

    def theta_conditional_variance(self, p, xstar):
        if p == CENTERED:
            a = float(np.sum(xstar)) + 1.0
            b = self.n - float(np.sum(xstar)) + 1.0
            return a * b / ((a + b) ** 2 * (a + b + 1.0))
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        edges, masses = self._segments(xstar)
        total = masses.sum()
        lo, hi = edges[:-1], edges[1:]
        m1 = float(np.sum(masses * (lo + hi))) / (2.0 * total)
        m2 = float(np.sum(masses * (lo * lo + lo * hi + hi * hi))) / (3.0 * total)
        return m2 - m1 * m1

    def theta_conditional_cdf(self, p, xstar, t):
        t = np.asarray(t, dtype=float)
        if p == CENTERED:
            n1 = float(np.sum(xstar))
            return betainc(n1 + 1.0, self.n - n1 + 1.0, np.clip(t, 0.0, 1.0))
        if p != NONCENTERED:
            raise UnsupportedParametrizationError(f"{self.name}: {p.label()}")
        edges, masses = self._segments(xstar)
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        k = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, masses.size - 1)
        width = np.maximum(edges[k + 1] - edges[k], 1e-300)
        frac = np.clip((t - edges[k]) / width, 0.0, 1.0)
        return np.clip((cum[k] + frac * masses[k]) / cum[-1], 0.0, 1.0)

    def log_joint(self, x, theta) -> float:
        if not 0.0 < theta < 1.0:
            return -np.inf
        x = np.asarray(x, dtype=float)
        one = x > 0.5
        out = np.where(one, math.log(theta) + self._lf0,
                       math.log1p(-theta) + self._lf1)
        return float(np.sum(out))

    def functionals(self):
        return {"class0_count": lambda theta, x: float(np.sum(np.asarray(x) > 0.5))}


def build_classification(params: dict, y, scenario: str = "general") -> ClassificationMixtureModel:
    return ClassificationMixtureModel(y, scenario=scenario, **params)
