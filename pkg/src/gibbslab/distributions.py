"""Scalar distribution specifications and the operations models need.

Each law is a small frozen dataclass validated at construction. Free
functions (:func:`draw`, :func:`log_density`, :func:`cdf`,
:func:`inverse_cdf`) dispatch on the spec type; models mostly go through
these rather than scipy directly so that sampling stays tied to
:class:`~gibbslab.rng.RngStream` and truncated laws are drawn by exact
inversion instead of rejection loops.

Vectorized helpers for truncated normals (:func:`truncnorm_draw` and
friends) accept array parameters; the per-site conditional draws in several
models use them with one bound per site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln, ndtr, ndtri

from .errors import (
    DegenerateSupportError,
    InvalidParameterError,
    UnsupportedSpecError,
)
from .rng import RngStream

__all__ = [
    "DistSpec",
    "Normal",
    "Uniform",
    "Exponential",
    "Beta",
    "Cauchy",
    "Gamma",
    "TruncatedNormal",
    "TruncatedExponential",
    "draw",
    "log_density",
    "cdf",
    "inverse_cdf",
    "support",
    "mean",
    "variance",
    "truncnorm_draw",
    "truncnorm_ppf",
    "truncnorm_cdf",
    "truncnorm_logpdf",
    "truncnorm_mass",
]

_LOG_2PI = math.log(2.0 * math.pi)


class DistSpec:
    """Marker base class for distribution specifications."""

    __slots__ = ()


@dataclass(frozen=True)
class Normal(DistSpec):
    mean: float
    sd: float

    def __post_init__(self):
        if not (self.sd > 0) or not math.isfinite(self.sd) or not math.isfinite(self.mean):
            raise InvalidParameterError(f"Normal requires finite mean and sd > 0, got {self}")


@dataclass(frozen=True)
class Uniform(DistSpec):
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi) or not math.isfinite(self.lo) or not math.isfinite(self.hi):
            raise InvalidParameterError(f"Uniform requires finite lo < hi, got {self}")


@dataclass(frozen=True)
class Exponential(DistSpec):
    rate: float

    def __post_init__(self):
        if not (self.rate > 0) or not math.isfinite(self.rate):
            raise InvalidParameterError(f"Exponential requires rate > 0, got {self}")


@dataclass(frozen=True)
class Beta(DistSpec):
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidParameterError(f"Beta requires a, b > 0, got {self}")


@dataclass(frozen=True)
class Cauchy(DistSpec):
    location: float
    scale: float

    def __post_init__(self):
        if not (self.scale > 0) or not math.isfinite(self.location):
            raise InvalidParameterError(f"Cauchy requires scale > 0, got {self}")


@dataclass(frozen=True)
class Gamma(DistSpec):
    """Shape-rate parametrization: density x^(shape-1) exp(-rate x)."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise InvalidParameterError(f"Gamma requires shape, rate > 0, got {self}")


@dataclass(frozen=True)
class TruncatedNormal(DistSpec):
    mean: float
    sd: float
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.sd > 0):
            raise InvalidParameterError(f"TruncatedNormal requires sd > 0, got {self}")
        if not (self.lo < self.hi):
            raise InvalidParameterError(f"TruncatedNormal requires lo < hi, got {self}")


@dataclass(frozen=True)
class TruncatedExponential(DistSpec):
    rate: float
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.rate > 0):
            raise InvalidParameterError(f"TruncatedExponential requires rate > 0, got {self}")
        if self.lo < 0 or not (self.lo < self.hi):
            raise InvalidParameterError(
                f"TruncatedExponential requires 0 <= lo < hi, got {self}"
            )


# ---------------------------------------------------------------------------
# Truncated normal machinery, vectorized and tail-safe.
#
# Inversion runs in whichever tail representation keeps probabilities well
# away from 1: regions entirely in a tail use survival-function coordinates,
# where double precision holds values down to ~1e-308. A naive
# Phi(lo) + u * mass computation would round to 1.0 for far right tails.
# ---------------------------------------------------------------------------


def _std_interval(mean, sd, lo, hi):
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    a = (np.asarray(lo, dtype=float) - mean) / sd
    b = (np.asarray(hi, dtype=float) - mean) / sd
    return mean, sd, a, b


def _std_truncnorm_mass(a, b):
    # Evaluate in the tail that keeps both terms small.
    right = a >= 0
    mass = np.where(
        right,
        ndtr(-np.where(right, a, 0.0)) - ndtr(-np.where(right, b, np.inf)),
        ndtr(np.where(right, 0.0, b)) - ndtr(np.where(right, -np.inf, a)),
    )
    return mass


def _std_truncnorm_ppf(u, a, b):
    u = np.asarray(u, dtype=float)
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    u, a, b = np.broadcast_arrays(u, a, b)
    out = np.empty(np.broadcast(u, a).shape, dtype=float)

    right = a >= 0  # entire region in the right tail (or touching 0)
    left = b <= 0
    mid = ~(right | left)

    if np.any(right):
        qa = ndtr(-a[right])
        qb = ndtr(-b[right])
        q = qa + u[right] * (qb - qa)
        out[right] = -ndtri(q)
    if np.any(left):
        # mirror image of the right-tail branch
        pa = ndtr(a[left])
        pb = ndtr(b[left])
        p = pb + (1.0 - u[left]) * (pa - pb)
        out[left] = ndtri(p)
    if np.any(mid):
        pa = ndtr(a[mid])
        pb = ndtr(b[mid])
        out[mid] = ndtri(pa + u[mid] * (pb - pa))

    # Inversion can land a hair outside [a, b] at the last ulp.
    np.clip(out, a, b, out=out)
    return out


def truncnorm_mass(mean, sd, lo, hi):
    """Probability mass of N(mean, sd^2) on [lo, hi], tail-safe."""
    _, _, a, b = _std_interval(mean, sd, lo, hi)
    return _std_truncnorm_mass(a, b)


def truncnorm_ppf(u, mean, sd, lo, hi):
    """Quantile of the truncated normal; array arguments broadcast."""
    mean, sd, a, b = _std_interval(mean, sd, lo, hi)
    mass = _std_truncnorm_mass(a, b)
    if not np.all(mass > 0):
        raise DegenerateSupportError(
            "truncation region carries zero mass at machine precision"
        )
    return mean + sd * _std_truncnorm_ppf(u, a, b)


def truncnorm_draw(rng: RngStream, mean, sd, lo, hi, size=None):
    """Exact inversion draw from N(mean, sd^2) restricted to [lo, hi]."""
    if size is None:
        size = np.broadcast(
            np.asarray(mean), np.asarray(sd), np.asarray(lo), np.asarray(hi)
        ).shape or None
    u = rng.open_unit(size=size)
    return truncnorm_ppf(u, mean, sd, lo, hi)


def truncnorm_cdf(x, mean, sd, lo, hi):
    mean, sd, a, b = _std_interval(mean, sd, lo, hi)
    mass = _std_truncnorm_mass(a, b)
    if not np.all(mass > 0):
        raise DegenerateSupportError(
            "truncation region carries zero mass at machine precision"
        )
    z = (np.asarray(x, float) - mean) / sd
    z = np.clip(z, a, b)
    right = a >= 0
    num = np.where(right, ndtr(-a) - ndtr(-z), ndtr(z) - ndtr(a))
    return np.clip(num / mass, 0.0, 1.0)


def truncnorm_logpdf(x, mean, sd, lo, hi):
    mean, sd, a, b = _std_interval(mean, sd, lo, hi)
    mass = _std_truncnorm_mass(a, b)
    if not np.all(mass > 0):
        raise DegenerateSupportError(
            "truncation region carries zero mass at machine precision"
        )
    x = np.asarray(x, dtype=float)
    z = (x - mean) / sd
    core = -0.5 * z * z - 0.5 * _LOG_2PI - np.log(sd) - np.log(mass)
    inside = (z >= a) & (z <= b)
    return np.where(inside, core, -np.inf)


def _truncnorm_moments(mean, sd, lo, hi):
    _, _, a, b = _std_interval(mean, sd, lo, hi)
    mass = _std_truncnorm_mass(a, b)
    phi = lambda t: np.where(np.isfinite(t), np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi), 0.0)
    tphi = lambda t: np.where(np.isfinite(t), t * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi), 0.0)
    m1 = (phi(a) - phi(b)) / mass
    m = mean + sd * m1
    v = sd**2 * (1.0 + (tphi(a) - tphi(b)) / mass - m1**2)
    return float(m), float(v)


# ---------------------------------------------------------------------------
# Dispatch tables
# ---------------------------------------------------------------------------


def draw(spec: DistSpec, rng: RngStream, size=None):
    """Sample from ``spec``; scalar when ``size`` is None."""
    if isinstance(spec, Normal):
        return rng.normal(spec.mean, spec.sd, size)
    if isinstance(spec, Uniform):
        return rng.uniform(spec.lo, spec.hi, size)
    if isinstance(spec, Exponential):
        return rng.exponential(1.0 / spec.rate, size)
    if isinstance(spec, Beta):
        return rng.beta(spec.a, spec.b, size)
    if isinstance(spec, Cauchy):
        return spec.location + spec.scale * rng.generator.standard_cauchy(size)
    if isinstance(spec, Gamma):
        return rng.gamma(spec.shape, 1.0 / spec.rate, size)
    if isinstance(spec, TruncatedNormal):
        out = truncnorm_draw(rng, spec.mean, spec.sd, spec.lo, spec.hi, size=size)
        return float(out) if size is None else out
    if isinstance(spec, TruncatedExponential):
        u = rng.open_unit(size)
        return inverse_cdf(spec, u)
    raise UnsupportedSpecError(f"draw not implemented for {type(spec).__name__}")


def log_density(spec: DistSpec, x):
    """Log density of ``spec`` at ``x`` (vectorized); -inf outside support."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0

    if isinstance(spec, Normal):
        z = (x - spec.mean) / spec.sd
        out = -0.5 * z * z - 0.5 * _LOG_2PI - math.log(spec.sd)
    elif isinstance(spec, Uniform):
        inside = (x >= spec.lo) & (x <= spec.hi)
        out = np.where(inside, -math.log(spec.hi - spec.lo), -np.inf)
    elif isinstance(spec, Exponential):
        out = np.where(x >= 0, math.log(spec.rate) - spec.rate * x, -np.inf)
    elif isinstance(spec, Beta):
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (spec.a - 1.0) * np.log(x) if spec.a != 1.0 else 0.0
            tb = (spec.b - 1.0) * np.log1p(-x) if spec.b != 1.0 else 0.0
            core = ta + tb - betaln(spec.a, spec.b)
        inside = (x > 0) & (x < 1)
        # boundary points are fine when the exponent there is zero
        if spec.a == 1.0:
            inside |= x == 0.0
        if spec.b == 1.0:
            inside |= x == 1.0
        out = np.where(inside, core, -np.inf)
    elif isinstance(spec, Cauchy):
        z = (x - spec.location) / spec.scale
        out = -math.log(math.pi * spec.scale) - np.log1p(z * z)
    elif isinstance(spec, Gamma):
        with np.errstate(divide="ignore", invalid="ignore"):
            core = (
                spec.shape * math.log(spec.rate)
                - gammaln(spec.shape)
                + (spec.shape - 1.0) * np.log(x)
                - spec.rate * x
            )
        out = np.where(x > 0, core, -np.inf)
    elif isinstance(spec, TruncatedNormal):
        out = truncnorm_logpdf(x, spec.mean, spec.sd, spec.lo, spec.hi)
    elif isinstance(spec, TruncatedExponential):
        m = -math.expm1(-spec.rate * (spec.hi - spec.lo)) if math.isfinite(spec.hi) else 1.0
        m *= math.exp(-spec.rate * spec.lo)
        inside = (x >= spec.lo) & (x <= spec.hi)
        out = np.where(inside, math.log(spec.rate) - spec.rate * x - math.log(m), -np.inf)
    else:
        raise UnsupportedSpecError(f"log_density not implemented for {type(spec).__name__}")

    return float(out) if scalar else out


def cdf(spec: DistSpec, x):
    """CDF of ``spec`` at ``x`` for the laws with an implemented quantile."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0

    if isinstance(spec, Uniform):
        out = np.clip((x - spec.lo) / (spec.hi - spec.lo), 0.0, 1.0)
    elif isinstance(spec, Exponential):
        out = np.where(x > 0, -np.expm1(-spec.rate * np.maximum(x, 0.0)), 0.0)
    elif isinstance(spec, Cauchy):
        out = 0.5 + np.arctan((x - spec.location) / spec.scale) / math.pi
    elif isinstance(spec, Normal):
        out = ndtr((x - spec.mean) / spec.sd)
    elif isinstance(spec, Beta):
        if spec.a != 1.0:
            raise UnsupportedSpecError("cdf implemented only for Beta(1, b)")
        xc = np.clip(x, 0.0, 1.0)
        out = -np.expm1(spec.b * np.log1p(-xc))
        out = np.where(x >= 1.0, 1.0, np.where(x <= 0.0, 0.0, out))
    elif isinstance(spec, TruncatedNormal):
        out = truncnorm_cdf(x, spec.mean, spec.sd, spec.lo, spec.hi)
    elif isinstance(spec, TruncatedExponential):
        L = spec.hi - spec.lo
        m = -math.expm1(-spec.rate * L) if math.isfinite(L) else 1.0
        shifted = np.clip(x - spec.lo, 0.0, None)
        out = np.clip(-np.expm1(-spec.rate * shifted) / m, 0.0, 1.0)
        out = np.where(x >= spec.hi, 1.0, out)
    else:
        raise UnsupportedSpecError(f"cdf not implemented for {type(spec).__name__}")

    return float(out) if scalar else out


def inverse_cdf(spec: DistSpec, u):
    """Quantile function on [0, 1] for the tractable subset.

    Raises :class:`UnsupportedSpecError` for laws without an implemented
    quantile (general Beta, Gamma). Endpoints map to support endpoints,
    which are infinite for unbounded laws.
    """
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    if np.any((u < 0) | (u > 1)):
        raise InvalidParameterError("quantile argument must lie in [0, 1]")

    if isinstance(spec, Uniform):
        out = spec.lo + u * (spec.hi - spec.lo)
    elif isinstance(spec, Exponential):
        with np.errstate(divide="ignore"):
            out = -np.log1p(-u) / spec.rate
    elif isinstance(spec, Cauchy):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = spec.location + spec.scale * np.tan(math.pi * (u - 0.5))
        out = np.where(u == 0.0, -np.inf, np.where(u == 1.0, np.inf, out))
    elif isinstance(spec, Normal):
        with np.errstate(divide="ignore"):
            out = spec.mean + spec.sd * ndtri(u)
    elif isinstance(spec, Beta):
        if spec.a != 1.0:
            raise UnsupportedSpecError("inverse_cdf implemented only for Beta(1, b)")
        out = -np.expm1(np.log1p(-u) / spec.b)
    elif isinstance(spec, TruncatedNormal):
        out = truncnorm_ppf(u, spec.mean, spec.sd, spec.lo, spec.hi)
    elif isinstance(spec, TruncatedExponential):
        L = spec.hi - spec.lo
        m = -math.expm1(-spec.rate * L) if math.isfinite(L) else 1.0
        out = spec.lo - np.log1p(-u * m) / spec.rate
    else:
        raise UnsupportedSpecError(f"inverse_cdf not implemented for {type(spec).__name__}")

    return float(out) if scalar else out


def support(spec: DistSpec) -> tuple[float, float]:
    if isinstance(spec, Normal) or isinstance(spec, Cauchy):
        return (-math.inf, math.inf)
    if isinstance(spec, Uniform):
        return (spec.lo, spec.hi)
    if isinstance(spec, Exponential):
        return (0.0, math.inf)
    if isinstance(spec, Beta):
        return (0.0, 1.0)
    if isinstance(spec, Gamma):
        return (0.0, math.inf)
    if isinstance(spec, (TruncatedNormal, TruncatedExponential)):
        return (spec.lo, spec.hi)
    raise UnsupportedSpecError(f"support not implemented for {type(spec).__name__}")


def mean(spec: DistSpec) -> float:
    """Closed-form mean; raises for laws without one (Cauchy)."""
    if isinstance(spec, Normal):
        return spec.mean
    if isinstance(spec, Uniform):
        return 0.5 * (spec.lo + spec.hi)
    if isinstance(spec, Exponential):
        return 1.0 / spec.rate
    if isinstance(spec, Beta):
        return spec.a / (spec.a + spec.b)
    if isinstance(spec, Gamma):
        return spec.shape / spec.rate
    if isinstance(spec, TruncatedNormal):
        return _truncnorm_moments(spec.mean, spec.sd, spec.lo, spec.hi)[0]
    if isinstance(spec, TruncatedExponential):
        r, L = spec.rate, spec.hi - spec.lo
        if not math.isfinite(L):
            return spec.lo + 1.0 / r
        mass = -math.expm1(-r * L)
        return spec.lo + (1.0 - math.exp(-r * L) * (1.0 + r * L)) / (r * mass)
    raise UnsupportedSpecError(f"mean not implemented for {type(spec).__name__}")


def variance(spec: DistSpec) -> float:
    if isinstance(spec, Normal):
        return spec.sd**2
    if isinstance(spec, Uniform):
        return (spec.hi - spec.lo) ** 2 / 12.0
    if isinstance(spec, Exponential):
        return 1.0 / spec.rate**2
    if isinstance(spec, Beta):
        s = spec.a + spec.b
        return spec.a * spec.b / (s * s * (s + 1.0))
    if isinstance(spec, Gamma):
        return spec.shape / spec.rate**2
    if isinstance(spec, TruncatedNormal):
        return _truncnorm_moments(spec.mean, spec.sd, spec.lo, spec.hi)[1]
    if isinstance(spec, TruncatedExponential):
        r, L = spec.rate, spec.hi - spec.lo
        if not math.isfinite(L):
            return 1.0 / r**2
        mass = -math.expm1(-r * L)
        e1 = (1.0 - math.exp(-r * L) * (1.0 + r * L)) / (r * mass)
        e2 = 2.0 * (1.0 - math.exp(-r * L) * (1.0 + r * L + 0.5 * (r * L) ** 2)) / (
            r * r * mass
        )
        return e2 - e1 * e1
    raise UnsupportedSpecError(f"variance not implemented for {type(spec).__name__}")
