"""Parametrization labels and latent-variable transforms.

A *parametrization* names how the latent block is represented while the
parameter is updated: centered (the latent kept on its natural scale),
noncentered (transformed to be a priori independent of the parameter),
partially centered (a weighted compromise), or data-based (the transform
uses the observations themselves).

A :class:`Reparametrization` packages the pair of maps the four-step sweep
needs: ``forward`` rebuilds the natural latent from the working
representation, ``conditional_inverse`` recovers the working representation
from the natural latent. When the forward map is many-to-one the inverse is
a conditional draw, hence the rng argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .distributions import DistSpec, Uniform, cdf, inverse_cdf
from .errors import (
    InvalidParameterError,
    NonpositiveScaleError,
    NonpositiveVarianceError,
    NotPositiveDefiniteError,
)
from .rng import RngStream

__all__ = [
    "Parametrization",
    "CENTERED",
    "NONCENTERED",
    "Reparametrization",
    "identity_reparam",
    "location_ncp",
    "scale_ncp",
    "inverse_cdf_ncp",
    "markov_recursive_ncp",
    "gaussian_field_ncp",
    "partial_ncp",
    "location_weight_partial",
    "compose_reparam",
]

_KINDS = ("centered", "noncentered", "partial", "data_based")


@dataclass(frozen=True)
class Parametrization:
    """Tagged label for a sampling parametrization.

    ``partial`` carries either a scalar ``weight`` in [0, 1] (degree of
    centering: weight 1 behaves like centered, weight 0 like noncentered)
    or a model-defined ``tag`` such as ``"hybrid"``. ``data_based`` always
    carries a tag naming the transform family.
    """

    kind: str
    weight: Optional[float] = None
    tag: Optional[str] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown parametrization kind {self.kind!r}")
        if self.kind == "partial":
            if self.weight is None and self.tag is None:
                raise InvalidParameterError("partial requires a weight or a tag")
            if self.weight is not None and not (0.0 <= self.weight <= 1.0):
                raise InvalidParameterError("partial weight must lie in [0, 1]")
        elif self.kind == "data_based":
            if not self.tag:
                raise InvalidParameterError("data_based requires a tag")
        elif self.weight is not None or self.tag is not None:
            raise InvalidParameterError(f"{self.kind} takes no weight or tag")

    @staticmethod
    def partial(weight: float) -> "Parametrization":
        return Parametrization("partial", weight=float(weight))

    @staticmethod
    def partial_tagged(tag: str) -> "Parametrization":
        return Parametrization("partial", tag=tag)

    @staticmethod
    def data_based(tag: str) -> "Parametrization":
        return Parametrization("data_based", tag=tag)

    @staticmethod
    def from_string(text: str) -> "Parametrization":
        """Parse labels like ``centered``, ``partial:0.25``, ``data_based:vm``."""
        head, _, rest = text.strip().partition(":")
        if head == "centered":
            return CENTERED
        if head == "noncentered":
            return NONCENTERED
        if head == "partial":
            if not rest:
                raise InvalidParameterError("partial label needs ':<weight>' or ':<tag>'")
            try:
                return Parametrization.partial(float(rest))
            except ValueError:
                return Parametrization.partial_tagged(rest)
        if head == "data_based":
            if not rest:
                raise InvalidParameterError("data_based label needs ':<tag>'")
            return Parametrization.data_based(rest)
        raise InvalidParameterError(f"cannot parse parametrization {text!r}")

    def label(self) -> str:
        if self.kind == "partial":
            return f"partial:{self.tag if self.tag is not None else format(self.weight, 'g')}"
        if self.kind == "data_based":
            return f"data_based:{self.tag}"
        return self.kind


CENTERED = Parametrization("centered")
NONCENTERED = Parametrization("noncentered")


@dataclass
class Reparametrization:
    """Pair of maps between the working latent ``xstar`` and the natural ``x``.

    ``forward(xstar, theta, y)`` must be deterministic. ``conditional_inverse``
    may randomize when ``forward`` is many-to-one; deterministic inverses
    simply ignore the rng. ``xstar_prior`` optionally records the working
    variable's prior law when it is parameter-free (the noncentered case),
    which independence checks use.
    """

    name: str
    forward: Callable[[Any, float, Any], Any]
    conditional_inverse: Callable[[Any, float, Any, RngStream], Any]
    xstar_prior: Optional[DistSpec] = None


def identity_reparam() -> Reparametrization:
    return Reparametrization(
        name="identity",
        forward=lambda xstar, theta, y: xstar,
        conditional_inverse=lambda x, theta, y, rng: x,
    )


def location_ncp(family: DistSpec) -> Reparametrization:
    """Shift transform ``x = xstar + theta`` for location families.

    ``family`` is the parameter-free law of the working variable.
    """

    def fwd(xstar, theta, y):
        return np.asarray(xstar, dtype=float) + theta

    def inv(x, theta, y, rng):
        return np.asarray(x, dtype=float) - theta

    return Reparametrization("location", fwd, inv, xstar_prior=family)


def scale_ncp(family: DistSpec) -> Reparametrization:
    """Scale transform ``x = theta * xstar``; requires theta > 0."""

    def fwd(xstar, theta, y):
        if not theta > 0:
            raise NonpositiveScaleError(f"scale transform needs theta > 0, got {theta}")
        return theta * np.asarray(xstar, dtype=float)

    def inv(x, theta, y, rng):
        if not theta > 0:
            raise NonpositiveScaleError(f"scale transform needs theta > 0, got {theta}")
        return np.asarray(x, dtype=float) / theta

    return Reparametrization("scale", fwd, inv, xstar_prior=family)


def inverse_cdf_ncp(family: Callable[[float], DistSpec]) -> Reparametrization:
    """Quantile transform ``x = F_theta^{-1}(xstar)`` with uniform xstar.

    ``family`` maps a parameter value to the distribution of each latent
    coordinate. Coordinates are treated as conditionally i.i.d.
    """

    def fwd(xstar, theta, y):
        return inverse_cdf(family(theta), xstar)

    def inv(x, theta, y, rng):
        return cdf(family(theta), x)

    return Reparametrization("inverse_cdf", fwd, inv, xstar_prior=Uniform(0.0, 1.0))


def markov_recursive_ncp(
    initial: Callable[[float], DistSpec],
    transition: Callable[[float, float], DistSpec],
) -> Reparametrization:
    """Sequential quantile transform for a Markov latent chain.

    Coordinate i is built as the quantile of its conditional law given
    coordinate i-1, so a vector of i.i.d. uniforms maps to a path and back.
    """

    def fwd(xstar, theta, y):
        u = np.atleast_1d(np.asarray(xstar, dtype=float))
        out = np.empty_like(u)
        out[0] = inverse_cdf(initial(theta), u[0])
        for i in range(1, u.size):
            out[i] = inverse_cdf(transition(theta, out[i - 1]), u[i])
        return out

    def inv(x, theta, y, rng):
        xv = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xv)
        out[0] = cdf(initial(theta), xv[0])
        for i in range(1, xv.size):
            out[i] = cdf(transition(theta, xv[i - 1]), xv[i])
        return out

    return Reparametrization("markov_recursive", fwd, inv, xstar_prior=Uniform(0.0, 1.0))


def gaussian_field_ncp(mu: float, sigma: float, corr: np.ndarray) -> Reparametrization:
    """Whitening transform for a Gaussian field with fixed correlation.

    ``forward(xstar, theta, y) = sigma * L @ xstar + mu`` where ``L`` is the
    lower Cholesky factor of ``corr``. ``theta`` may be None (use the built-in
    ``(mu, sigma)``) or a pair overriding them.
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise InvalidParameterError("corr must be a square matrix")
    try:
        L = cholesky(corr, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
        raise NotPositiveDefiniteError(str(exc)) from exc
    except Exception as exc:
        raise NotPositiveDefiniteError(f"correlation matrix is not positive definite: {exc}") from exc

    def unpack(theta):
        if theta is None:
            return mu, sigma
        m, s = float(theta[0]), float(theta[1])
        if not s > 0:
            raise NonpositiveScaleError(f"field scale must be positive, got {s}")
        return m, s

    def fwd(xstar, theta, y):
        m, s = unpack(theta)
        return s * (L @ np.asarray(xstar, dtype=float)) + m

    def inv(x, theta, y, rng):
        m, s = unpack(theta)
        return solve_triangular(L, (np.asarray(x, dtype=float) - m) / s, lower=True)

    return Reparametrization("gaussian_field", fwd, inv)


def partial_ncp(
    v: Callable[[float, Any], Any],
    m: Callable[[float, Any], Any],
) -> Reparametrization:
    """Affine transform ``x = sqrt(v(theta, y)) * xstar + m(theta, y)``.

    Choosing ``v`` and ``m`` as the prior moments of the latent gives a
    noncentered scheme; choosing its conditional-posterior moments gives a
    data-based scheme that decouples the two blocks entirely.
    """

    def scale(theta, y):
        val = np.asarray(v(theta, y), dtype=float)
        if np.any(val <= 0):
            raise NonpositiveVarianceError(f"variance function returned {val}")
        return np.sqrt(val)

    def fwd(xstar, theta, y):
        return scale(theta, y) * np.asarray(xstar, dtype=float) + m(theta, y)

    def inv(x, theta, y, rng):
        return (np.asarray(x, dtype=float) - m(theta, y)) / scale(theta, y)

    return Reparametrization("partial", fwd, inv)


def location_weight_partial(weight: float) -> Reparametrization:
    """Scalar-weight family for location models: ``x = xstar + (1 - w) * theta``.

    Weight 1 keeps the latent fully centered (identity transform); weight 0
    removes the parameter entirely (the noncentered shift).
    """
    if not (0.0 <= weight <= 1.0):
        raise InvalidParameterError("weight must lie in [0, 1]")
    w = float(weight)
    rp = partial_ncp(lambda theta, y: 1.0, lambda theta, y: (1.0 - w) * theta)
    rp.name = f"location_weight_{w:g}"
    return rp


def compose_reparam(outer: Reparametrization, inner: Reparametrization) -> Reparametrization:
    """Composition: the working variable of ``outer`` is re-expressed by ``inner``.

    ``forward = outer.forward(inner.forward(xstar))`` and the inverse runs
    the two conditional inverses in the opposite order.
    """

    def fwd(xstar, theta, y):
        return outer.forward(inner.forward(xstar, theta, y), theta, y)

    def inv(x, theta, y, rng):
        return inner.conditional_inverse(
            outer.conditional_inverse(x, theta, y, rng), theta, y, rng
        )

    return Reparametrization(f"{outer.name}({inner.name})", fwd, inv)
