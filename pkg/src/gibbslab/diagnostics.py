"""Convergence and complexity measurement for Gibbs chain output.

Covers autocovariance estimation, integrated autocorrelation time and
effective sample size, the empirical lag-1 rate estimate, the fraction of
missing information, mixing time, log-log scaling fits, and tail-escape
timing. Everything here is a pure function of recorded traces; nothing
mutates sampler state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .engine import ChainTrace, SamplerConfig, sweep_kernel
from .errors import (
    InsufficientGridError,
    InsufficientLengthError,
    InvalidParameterError,
    OracleUnavailableError,
    OutOfRangeError,
)
from .model import GibbsModel
from .reparam import Parametrization
from .rng import RngStream

__all__ = [
    "DiagnosticsReport",
    "ScalingFit",
    "EscapeSummary",
    "autocovariance",
    "iat",
    "ess",
    "lag1_correlation",
    "gamma_hat",
    "fraction_missing_info",
    "mixing_time",
    "scaling_fit",
    "escape_time",
    "diagnostics_report",
]

# Values this close to 1 map to the +inf mixing-time sentinel instead of an
# astronomically large finite number that would be noise anyway.
_GAMMA_SENTINEL_BAND = 1e-12

_MIN_IAT_LENGTH = 1000


def _as_chain(chain) -> np.ndarray:
    if isinstance(chain, ChainTrace):
        chain = chain.theta
    out = np.asarray(chain, dtype=float).ravel()
    return out


def _autocov_full(x: np.ndarray) -> np.ndarray:
    """Biased (1/N) autocovariance at all lags 0..N-1 via FFT."""
    n = x.size
    xc = x - x.mean()
    nfft = 1 << int(2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n]
    return acov / n


def autocovariance(chain, max_lag: int) -> np.ndarray:
    """Biased autocovariance estimates at lags 0..max_lag."""
    x = _as_chain(chain)
    if max_lag < 1:
        raise InvalidParameterError("max_lag must be at least 1")
    if x.size <= max_lag:
        raise InsufficientLengthError(
            f"chain of length {x.size} cannot support lag {max_lag}"
        )
    return _autocov_full(x)[: max_lag + 1]


def iat(chain) -> float:
    """Integrated autocorrelation time, 1 + 2*sum of autocorrelations.

    The sum is truncated by the initial-monotone-positive-sequence rule on
    the paired sums rho[2m] + rho[2m+1], which is parameter free and stays
    stable at the chain lengths the experiment grids use. Never below 1.
    """
    x = _as_chain(chain)
    n = x.size
    if n < _MIN_IAT_LENGTH:
        raise InsufficientLengthError(f"need at least {_MIN_IAT_LENGTH} samples, got {n}")
    acov = _autocov_full(x)
    if acov[0] <= 0:
        return 1.0
    rho = acov / acov[0]
    pairs = (n - 1) // 2
    gam = rho[: 2 * pairs : 2] + rho[1 : 2 * pairs : 2]
    nonpos = np.nonzero(gam <= 0)[0]
    if nonpos.size:
        gam = gam[: nonpos[0]]
    if gam.size == 0:
        return 1.0
    gam = np.minimum.accumulate(gam)
    return max(1.0, 2.0 * float(gam.sum()) - 1.0)


def ess(chain) -> float:
    """Effective sample size, chain length divided by the IAT."""
    x = _as_chain(chain)
    return x.size / iat(x)


def lag1_correlation(chain) -> float:
    """Lag-1 autocorrelation with the biased normalization."""
    x = _as_chain(chain)
    if x.size < 2:
        raise InsufficientLengthError("need at least 2 samples for a lag-1 estimate")
    acov = _autocov_full(x)
    if acov[0] <= 0:
        return 0.0
    return float(acov[1] / acov[0])


def gamma_hat(chain, functionals: Optional[Dict[str, Callable]] = None) -> float:
    """Empirical rate estimate: max lag-1 autocorrelation over functionals.

    This is a LOWER bound on the maximal correlation, whose supremum runs
    over all square-integrable functionals; only the supplied dictionary is
    searched. Result is clipped into [0, 1).
    """
    x = _as_chain(chain)
    if x.size < 2:
        raise InsufficientLengthError("need at least 2 samples for a lag-1 estimate")
    if not functionals:
        functionals = {"identity": lambda v: v}
    best = 0.0
    for f in functionals.values():
        series = np.asarray(f(x), dtype=float)
        if series.shape != x.shape:
            series = np.array([f(v) for v in x], dtype=float)
        best = max(best, lag1_correlation(series))
    return min(best, 1.0 - 1e-15)


def fraction_missing_info(trace_or_pair) -> float:
    """Plug-in estimate of the fraction of missing information.

    One minus the chain average of the analytic conditional variance of the
    parameter given the working latent, divided by the empirical marginal
    variance. Accepts a trace that recorded ``theta_cond_var`` or a
    ``(theta_samples, conditional_variances)`` pair. Clipped to [0, 1].
    """
    if isinstance(trace_or_pair, ChainTrace):
        theta = trace_or_pair.theta
        cond = trace_or_pair.functionals.get("theta_cond_var")
        if cond is None:
            raise OracleUnavailableError(
                "trace has no recorded conditional variances; the parameter "
                "block was not updated from a conjugate conditional"
            )
    else:
        theta, cond = trace_or_pair
    theta = np.asarray(theta, dtype=float)
    cond = np.asarray(cond, dtype=float)
    if theta.size < 2:
        raise InsufficientLengthError("need at least 2 samples")
    mean_cond = float(cond.mean())
    if mean_cond <= 0.0:
        return 1.0
    marginal = float(theta.var())
    if marginal <= 0.0:
        return 0.0
    return float(min(max(1.0 - mean_cond / marginal, 0.0), 1.0))


def mixing_time(gamma: float) -> float:
    """Mixing time -1/log(gamma) with a +inf sentinel just below 1.

    Near 1 this approaches 1/(1-gamma), the usual slowdown reading.
    """
    if gamma >= 1.0 - _GAMMA_SENTINEL_BAND:
        if gamma <= 1.0:
            return math.inf
        raise OutOfRangeError(f"gamma must lie in (0, 1), got {gamma}")
    if gamma <= 0.0:
        raise OutOfRangeError(f"gamma must lie in (0, 1), got {gamma}")
    return -1.0 / math.log(gamma)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line through (log n, log iat)."""

    grid: Tuple[Tuple[float, float], ...]
    slope: float
    intercept: float
    r_squared: float


def scaling_fit(grid: Sequence[Tuple[float, float]]) -> ScalingFit:
    """Fit log(iat) = slope*log(n) + intercept over a size grid."""
    pts = tuple((float(n), float(t)) for n, t in grid)
    ns = np.array([p[0] for p in pts])
    ts = np.array([p[1] for p in pts])
    if np.unique(ns).size < 3:
        raise InsufficientGridError("need at least 3 distinct grid sizes")
    if np.any(ns <= 0):
        raise InvalidParameterError("grid sizes must be positive")
    if np.any(ts < 1.0):
        raise InvalidParameterError("IAT values below 1 are not meaningful")
    lx = np.log(ns)
    ly = np.log(ts)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(grid=pts, slope=float(slope), intercept=float(intercept), r_squared=r2)


@dataclass(frozen=True)
class EscapeSummary:
    """Escape times of replicate chains started in a remote tail."""

    times: Tuple[int, ...]
    median: float
    censored: int
    max_iters: int


def escape_time(
    model: GibbsModel,
    parametrization: Parametrization,
    theta0: float,
    radius: float,
    max_iters: int,
    replicates: int,
    rng: RngStream,
) -> EscapeSummary:
    """Median sweeps until the parameter enters a ball around the data center.

    Each replicate starts at ``theta0`` with a fresh latent draw and runs
    until |theta - center| < radius or ``max_iters`` sweeps. Runs that never
    enter count as ``max_iters`` and are reported in ``censored`` so a slow
    scheme keeps a well-defined median instead of hanging.
    """
    if replicates < 31 or replicates % 2 == 0:
        raise InvalidParameterError("replicates must be odd and at least 31")
    if radius <= 0:
        raise InvalidParameterError("radius must be positive")
    if max_iters < 1:
        raise InvalidParameterError("max_iters must be at least 1")
    cfg = SamplerConfig(iterations=0, parametrization=parametrization)
    init, step = sweep_kernel(model, cfg)
    center = model.data_center()
    times = np.empty(replicates, dtype=np.int64)
    censored = 0
    for r in range(replicates):
        sub = rng.substream(r)
        theta = float(theta0)
        if abs(theta - center) < radius:
            times[r] = 0
            continue
        latent = init(theta, sub)
        hit = max_iters
        for i in range(1, max_iters + 1):
            theta, latent = step(theta, latent, sub)
            if abs(theta - center) < radius:
                hit = i
                break
        else:
            censored += 1
        times[r] = hit
    return EscapeSummary(
        times=tuple(int(t) for t in times),
        median=float(np.median(times)),
        censored=censored,
        max_iters=max_iters,
    )


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-chain summary used by the experiment harness.

    ``gamma_hat`` is a lower bound on the true rate (the supremum defining
    it runs over all square-integrable functionals, not just the supplied
    dictionary) and ``tau_hat`` is derived from it, so both inherit that
    one-sided bias.
    """

    iat: float
    ess: float
    lag1: float
    gamma_hat: float
    tau_hat: float
    sample_count: int
    per_functional: Dict[str, float] = field(default_factory=dict)


def diagnostics_report(chain, functionals: Optional[Dict[str, Callable]] = None) -> DiagnosticsReport:
    """Bundle the standard estimates for one recorded chain."""
    x = _as_chain(chain)
    tau_int = iat(x)
    r1 = lag1_correlation(x)
    g = gamma_hat(x, functionals)
    tau = 0.0 if g <= 0.0 else mixing_time(g)
    per = {}
    if functionals:
        for name, f in functionals.items():
            series = np.asarray(f(x), dtype=float)
            if series.shape != x.shape:
                series = np.array([f(v) for v in x], dtype=float)
            per[name] = lag1_correlation(series)
    return DiagnosticsReport(
        iat=tau_int,
        ess=x.size / tau_int,
        lag1=r1,
        gamma_hat=g,
        tau_hat=tau,
        sample_count=x.size,
        per_functional=per,
    )
