"""Two-block Gibbs engine with pluggable parametrizations and update policies.

Each iteration performs the four-step sweep:

1. update the latent in natural coordinates from its conditional given the
   current parameter and the data;
2. map it to working coordinates with the parametrization's conditional
   inverse (a draw when the forward map is many-to-one);
3. update the parameter from its conditional given the working latent;
4. map the working latent back to natural coordinates under the new
   parameter value.

Steps 2 and 4 vanish for the centered scheme. Models whose working-latent
conditional is directly tractable can declare a ``direct`` route, in which
case step 1 draws the working latent itself and step 4 is skipped; on
models offering both routes the two chains agree draw for draw because both
consume the same randomness.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    ConfigError,
    DegenerateConditionalError,
    InsufficientGridError,
    NonfiniteTargetError,
    SupportNotCoveredError,
)
from .model import GibbsModel, Latent
from .reparam import CENTERED, NONCENTERED, Parametrization
from .rng import RngStream

__all__ = [
    "ExactConditional",
    "RandomWalkMH",
    "GridInverseCDF",
    "SingleSiteMH",
    "PathCrankNicolson",
    "SamplerConfig",
    "ChainTrace",
    "mh_step",
    "GridDensity",
    "grid_inverse_cdf_update",
    "run_chain",
    "run_centered",
    "run_noncentered",
    "run_interleaved",
    "sweep_kernel",
]

# Endpoint densities above this fraction of the peak mean the grid is
# clipping real mass (unless the endpoint is a declared hard boundary).
_GRID_TAIL_FRACTION = 1e-12

# A conditional whose probe variance falls below this times the scale hint
# has collapsed; the chain would silently stall, so fail loudly instead.
_DEGENERACY_RATIO = 1e-14
_PROBE_LEN = 100


# ---------------------------------------------------------------------------
# Update policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactConditional:
    """Draw exactly from the full conditional (model-provided)."""


@dataclass(frozen=True)
class RandomWalkMH:
    """Symmetric normal random-walk Metropolis.

    ``step_sd=None`` asks for pilot tuning: the step is set to 2.4 times the
    standard deviation of the parameter over a pilot window of burn-in
    sweeps, then frozen when burn-in ends.
    """

    step_sd: Optional[float] = None
    repeats: int = 1


@dataclass(frozen=True)
class GridInverseCDF:
    """Exact draw from a piecewise-linear density on a grid.

    ``lo``/``hi`` of None defer to the model's default grid. ``closed_lo``
    and ``closed_hi`` mark endpoints that are hard support boundaries.
    """

    lo: Optional[float] = None
    hi: Optional[float] = None
    points: int = 1024
    closed_lo: bool = False
    closed_hi: bool = False


@dataclass(frozen=True)
class SingleSiteMH:
    """Sitewise random-walk Metropolis over a vector latent."""

    step_sd: Optional[float] = None
    repeats: int = 1


@dataclass(frozen=True)
class PathCrankNicolson:
    """Prior-preserving autoregressive proposal for Gaussian path priors.

    Proposes ``sqrt(1 - beta^2) * (x - m) + beta * (x_prior - m) + m`` with a
    fresh prior draw ``x_prior`` and accepts on the likelihood ratio alone,
    which leaves prior times likelihood invariant.
    """

    beta: float = 0.3
    repeats: int = 1


ThetaUpdate = Union[ExactConditional, RandomWalkMH, GridInverseCDF]
XUpdate = Union[ExactConditional, RandomWalkMH, SingleSiteMH, PathCrankNicolson]


@dataclass(frozen=True)
class SamplerConfig:
    """Everything needed to reproduce one chain.

    ``iterations`` counts post-burn-in sweeps; every ``thin``-th one is
    recorded. The same config and seed always yield the same trace.
    """

    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    parametrization: Parametrization = CENTERED
    theta_update: Optional[ThetaUpdate] = None
    x_update: Optional[XUpdate] = None
    direct_latent: Optional[bool] = None
    record_conditional_variance: bool = True
    check_degeneracy: bool = True
    functionals: tuple = ()

    def __post_init__(self):
        if self.iterations < 0 or self.burn_in < 0:
            raise ConfigError("iterations and burn_in must be nonnegative")
        if self.thin < 1:
            raise ConfigError("thin must be at least 1")


@dataclass
class ChainTrace:
    """Recorded output of one chain."""

    model: str
    parametrization: Parametrization
    theta: np.ndarray
    functionals: dict
    acceptance_rates: dict
    config: SamplerConfig
    wall_time: float
    final_theta: float
    meta: dict = field(default_factory=dict)


class _Tally:
    __slots__ = ("accepted", "proposed")

    def __init__(self):
        self.accepted = 0
        self.proposed = 0

    def add(self, accepted: int, proposed: int = 1):
        self.accepted += int(accepted)
        self.proposed += int(proposed)

    def rate(self) -> float:
        # exact conditionals never propose, and always move
        return 1.0 if self.proposed == 0 else self.accepted / self.proposed


# ---------------------------------------------------------------------------
# Metropolis and grid primitives
# ---------------------------------------------------------------------------


def mh_step(
    log_target: Callable[[float], float],
    current: float,
    step_sd: float,
    rng: RngStream,
) -> tuple[float, bool]:
    """One symmetric random-walk Metropolis step.

    Raises :class:`NonfiniteTargetError` if the chain is currently at a
    state with nonfinite log target; proposals landing there are rejected.
    """
    lc = log_target(current)
    if not math.isfinite(lc):
        raise NonfiniteTargetError(f"log target at current state is {lc}")
    prop = current + step_sd * rng.standard_normal()
    lp = log_target(prop)
    if lp == -math.inf:
        return current, False
    diff = lp - lc
    if diff >= 0.0 or rng.open_unit() < math.exp(diff):
        return prop, True
    return current, False


class GridDensity:
    """Normalized piecewise-linear density over an ordered grid.

    Sampling inverts the piecewise-quadratic CDF exactly, so draws follow
    the trapezoid approximation of the target with no rejection loop.
    """

    def __init__(
        self,
        grid: np.ndarray,
        log_values: np.ndarray,
        closed: tuple[bool, bool] = (False, False),
    ):
        grid = np.asarray(grid, dtype=float)
        logv = np.asarray(log_values, dtype=float)
        if grid.ndim != 1 or grid.size < 4:
            raise InsufficientGridError("grid needs at least 4 ordered points")
        if np.any(np.diff(grid) <= 0):
            raise InsufficientGridError("grid must be strictly increasing")
        if grid.shape != logv.shape:
            raise InsufficientGridError("grid and log density lengths differ")
        top = np.max(logv)
        if not math.isfinite(top):
            raise NonfiniteTargetError("log density has no finite maximum on the grid")
        w = np.exp(logv - top)
        if not closed[0] and w[0] > _GRID_TAIL_FRACTION:
            raise SupportNotCoveredError(
                f"density at grid start is {w[0]:.3e} of the peak; extend the grid"
            )
        if not closed[1] and w[-1] > _GRID_TAIL_FRACTION:
            raise SupportNotCoveredError(
                f"density at grid end is {w[-1]:.3e} of the peak; extend the grid"
            )
        h = np.diff(grid)
        cell_mass = 0.5 * (w[:-1] + w[1:]) * h
        total = cell_mass.sum()
        if not (total > 0) or not math.isfinite(total):
            raise NonfiniteTargetError("grid density integrates to zero or overflows")
        self.grid = grid
        self.w = w
        self.h = h
        self.cum = np.concatenate([[0.0], np.cumsum(cell_mass)])
        self.total = total

    def sample(self, rng: RngStream) -> float:
        r = rng.open_unit() * self.total
        k = int(np.searchsorted(self.cum, r, side="right")) - 1
        k = min(max(k, 0), self.h.size - 1)
        resid = r - self.cum[k]
        w0 = self.w[k]
        w1 = self.w[k + 1]
        h = self.h[k]
        if w1 == w0:
            s = resid / w0 if w0 > 0 else 0.5 * h
        else:
            a = (w1 - w0) / (2.0 * h)
            disc = w0 * w0 + 4.0 * a * resid
            s = (math.sqrt(max(disc, 0.0)) - w0) / (2.0 * a)
        return float(self.grid[k] + min(max(s, 0.0), h))

    def cdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.h.size - 1)
        s = np.clip(t - self.grid[k], 0.0, self.h[k])
        slope = (self.w[k + 1] - self.w[k]) / self.h[k]
        part = self.w[k] * s + 0.5 * slope * s * s
        out = (self.cum[k] + part) / self.total
        return np.clip(out, 0.0, 1.0)

    def mean(self) -> float:
        # exact first moment of each linear piece
        w0, w1, x0 = self.w[:-1], self.w[1:], self.grid[:-1]
        h = self.h
        m1 = x0 * (w0 + w1) / 2.0 + h * (w0 + 2.0 * w1) / 6.0
        return float(np.sum(m1 * h) / self.total)


def grid_inverse_cdf_update(
    log_density: Callable[[np.ndarray], np.ndarray],
    grid: np.ndarray,
    rng: RngStream,
    closed: tuple[bool, bool] = (False, False),
) -> float:
    """Exact draw from the piecewise-linear normalization of ``log_density``."""
    logv = np.asarray(log_density(np.asarray(grid, dtype=float)), dtype=float)
    return GridDensity(grid, logv, closed=closed).sample(rng)


# ---------------------------------------------------------------------------
# Block update drivers
# ---------------------------------------------------------------------------


class _ThetaDriver:
    """Resolves the parameter-update policy against model capabilities."""

    def __init__(self, model: GibbsModel, p: Parametrization, policy: ThetaUpdate, burn_in: int):
        self.model = model
        self.p = p
        self.policy = policy
        self.kind = type(policy).__name__
        self.tally = _Tally()
        self.grid_density: Optional[GridDensity] = None
        self.grid: Optional[np.ndarray] = None
        self.closed = (False, False)
        self.step = None
        self.adapting = False
        self.pilot: list = []
        self.pilot_len = min(1000, burn_in) if burn_in > 0 else 0
        if isinstance(policy, RandomWalkMH):
            self.step = policy.step_sd or model.theta_step_hint()
            self.adapting = policy.step_sd is None and self.pilot_len > 0
        elif isinstance(policy, GridInverseCDF):
            if policy.lo is None or policy.hi is None:
                self.grid, self.closed = model.theta_grid(p)
            else:
                self.grid = np.linspace(policy.lo, policy.hi, policy.points)
                self.closed = (policy.closed_lo, policy.closed_hi)

    def update(self, xstar: Latent, theta: float, rng: RngStream) -> float:
        policy = self.policy
        if isinstance(policy, ExactConditional):
            return self.model.draw_theta_exact(self.p, xstar, rng)
        if isinstance(policy, RandomWalkMH):
            logf = lambda t: self.model.log_theta_conditional(self.p, xstar, t)
            for _ in range(policy.repeats):
                theta, acc = mh_step(logf, theta, self.step, rng)
                self.tally.add(acc)
            if self.adapting:
                self.pilot.append(theta)
                if len(self.pilot) == self.pilot_len:
                    sd = float(np.std(self.pilot))
                    if sd > 0:
                        self.step = 2.4 * sd
                    self.adapting = False  # frozen from here on
            return theta
        # grid update: rebuild the density only when the conditional depends
        # on the working latent
        logf = lambda ts: np.array(
            [self.model.log_theta_conditional(self.p, xstar, t) for t in np.atleast_1d(ts)]
        )
        dens = GridDensity(self.grid, logf(self.grid), closed=self.closed)
        return dens.sample(rng)


class _XDriver:
    """Resolves the latent-update policy against model capabilities."""

    def __init__(self, model: GibbsModel, policy: XUpdate):
        self.model = model
        self.policy = policy
        self.tally = _Tally()

    def update(self, theta: float, x: Latent, rng: RngStream) -> Latent:
        model = self.model
        policy = self.policy
        if isinstance(policy, ExactConditional):
            return model.draw_x_exact(theta, x, rng)
        if isinstance(policy, SingleSiteMH):
            step = policy.step_sd or model.x_step_hint(theta)
            fast = model.sitewise_x_update(theta, x, step, policy.repeats, rng)
            if fast is not None:
                x, accepted, proposed = fast
                self.tally.add(accepted, proposed)
                return x
            if model.x_sites_independent:
                x = np.asarray(x, dtype=float)
                cur = model.x_site_log_targets(theta, x)
                for _ in range(policy.repeats):
                    prop = x + step * rng.standard_normal(x.shape)
                    new = model.x_site_log_targets(theta, prop)
                    ratio = new - cur
                    u = np.log(rng.open_unit(x.shape))
                    accept = u < ratio
                    x = np.where(accept, prop, x)
                    cur = np.where(accept, new, cur)
                    self.tally.add(int(accept.sum()), accept.size)
                return x
            x = np.array(x, dtype=float, copy=True)
            n = x.size
            for _ in range(policy.repeats):
                zs = step * rng.standard_normal(n)
                us = np.log(rng.open_unit(n))
                for i in range(n):
                    cur = model.log_x_site_conditional(theta, x, i, x[i])
                    v = x[i] + zs[i]
                    new = model.log_x_site_conditional(theta, x, i, v)
                    if us[i] < new - cur:
                        x[i] = v
                        self.tally.add(1)
                    else:
                        self.tally.add(0)
            return x
        if isinstance(policy, RandomWalkMH):
            step = policy.step_sd or model.x_step_hint(theta)
            x = np.asarray(x, dtype=float)
            for _ in range(policy.repeats):
                prop = x + step * rng.standard_normal(x.shape)
                diff = model.log_joint(prop, theta) - model.log_joint(x, theta)
                if math.log(rng.open_unit()) < diff:
                    x = prop
                    self.tally.add(1)
                else:
                    self.tally.add(0)
            return x
        if isinstance(policy, PathCrankNicolson):
            beta = policy.beta
            keep = math.sqrt(1.0 - beta * beta)
            for _ in range(policy.repeats):
                mean = model.x_prior_mean(theta)
                fresh = model.draw_x_prior(theta, rng)
                prop = mean + keep * (np.asarray(x) - mean) + beta * (fresh - mean)
                diff = model.log_likelihood_x(prop, theta) - model.log_likelihood_x(x, theta)
                if math.log(rng.open_unit()) < diff:
                    x = prop
                    self.tally.add(1)
                else:
                    self.tally.add(0)
            return x
        raise ConfigError(f"unknown latent update policy {policy!r}")


# ---------------------------------------------------------------------------
# Chain runners
# ---------------------------------------------------------------------------


def _resolve_theta_policy(model: GibbsModel, p: Parametrization, policy) -> ThetaUpdate:
    if policy is not None:
        return policy
    fallback = model.default_theta_update(p)
    return fallback if fallback is not None else ExactConditional()


def _resolve_x_policy(model: GibbsModel, p: Parametrization, policy) -> XUpdate:
    if policy is not None:
        return policy
    fallback = model.default_x_update(p)
    return fallback if fallback is not None else ExactConditional()


def _resolve_direct(model: GibbsModel, cfg: SamplerConfig, p: Parametrization) -> bool:
    modes = model.latent_update_modes(p)
    if cfg.direct_latent is None:
        return "four_step" not in modes
    if cfg.direct_latent and "direct" not in modes:
        raise ConfigError(f"{model.name} has no direct working-latent route under {p.label()}")
    if not cfg.direct_latent and "four_step" not in modes:
        raise ConfigError(f"{model.name} only offers the direct route under {p.label()}")
    return bool(cfg.direct_latent)


def run_chain(model: GibbsModel, cfg: SamplerConfig, rng: Optional[RngStream] = None) -> ChainTrace:
    """Run one chain under ``cfg.parametrization`` and return its trace."""
    p = cfg.parametrization
    model.require_support(p)
    if rng is None:
        rng = RngStream(cfg.seed, 0)

    start = time.perf_counter()
    rp = model.reparam(p)
    identity = rp.name == "identity"
    direct = _resolve_direct(model, cfg, p)

    theta = model.initial_theta(rng)
    xstar: Latent = None
    x: Latent = None
    if direct:
        xstar = model.initial_xstar(p, theta, rng)
    else:
        x = model.initial_latent(theta, rng)

    theta_driver = _ThetaDriver(model, p, _resolve_theta_policy(model, p, cfg.theta_update), cfg.burn_in)
    x_driver = _XDriver(model, _resolve_x_policy(model, p, cfg.x_update))

    kept = cfg.iterations // cfg.thin
    theta_out = np.empty(kept, dtype=float)
    fn_specs = {}
    if cfg.functionals:
        available = model.functionals()
        for name in cfg.functionals:
            if name not in available:
                raise ConfigError(f"{model.name} has no functional named {name!r}")
            fn_specs[name] = available[name]
    fn_out = {name: np.empty(kept, dtype=float) for name in fn_specs}

    record_cv = False
    if cfg.record_conditional_variance:
        try:
            probe_state = xstar if direct else x
            model.theta_conditional_variance(p, probe_state)
            record_cv = True
        except Exception:
            record_cv = False
    cv_out = np.empty(kept, dtype=float) if record_cv else None

    probe: list = [] if cfg.check_degeneracy else None
    total = cfg.burn_in + cfg.iterations
    k = 0
    for sweep in range(total):
        if direct:
            xstar = model.update_xstar_direct(p, theta, xstar, rng)
        else:
            x = x_driver.update(theta, x, rng)
            xstar = x if identity else rp.conditional_inverse(x, theta, model.y, rng)
        theta = theta_driver.update(xstar, theta, rng)
        if not direct and not identity:
            x = rp.forward(xstar, theta, model.y)
        elif identity:
            x = xstar

        if probe is not None and sweep < _PROBE_LEN:
            probe.append(theta)
            if len(probe) == _PROBE_LEN:
                if float(np.var(probe)) < _DEGENERACY_RATIO * max(model.theta_step_hint() ** 2, 1.0):
                    raise DegenerateConditionalError(
                        f"{model.name} under {p.label()}: parameter conditional has "
                        f"collapsed (probe variance below threshold)"
                    )
        post = sweep - cfg.burn_in + 1
        if post > 0 and post % cfg.thin == 0 and k < kept:
            theta_out[k] = theta
            state = xstar if direct else x
            for name, fn in fn_specs.items():
                fn_out[name][k] = fn(theta, state)
            if record_cv:
                cv_out[k] = model.theta_conditional_variance(p, xstar)
            k += 1

    functionals = dict(fn_out)
    if record_cv:
        functionals["theta_cond_var"] = cv_out
    rates = {"latent": x_driver.tally.rate(), "theta": theta_driver.tally.rate()}
    meta = {"direct_latent": direct}
    if theta_driver.step is not None:
        meta["theta_step_sd"] = theta_driver.step
    return ChainTrace(
        model=model.name,
        parametrization=p,
        theta=theta_out,
        functionals=functionals,
        acceptance_rates=rates,
        config=cfg,
        wall_time=time.perf_counter() - start,
        final_theta=float(theta) if np.ndim(theta) == 0 else theta,
        meta=meta,
    )


def sweep_kernel(model: GibbsModel, cfg: SamplerConfig):
    """Expose one full Gibbs sweep as ``(init, step)`` closures.

    ``init(theta, rng)`` builds the latent state for a forced parameter
    value; ``step(theta, latent, rng)`` runs one sweep and returns the new
    pair. Useful for escape-time experiments and custom kernels. Step-size
    adaptation is disabled; random-walk policies use their configured or
    hinted step throughout.
    """
    p = cfg.parametrization
    model.require_support(p)
    rp = model.reparam(p)
    identity = rp.name == "identity"
    direct = _resolve_direct(model, cfg, p)
    theta_driver = _ThetaDriver(model, p, _resolve_theta_policy(model, p, cfg.theta_update), burn_in=0)
    x_driver = _XDriver(model, _resolve_x_policy(model, p, cfg.x_update))

    def init(theta: float, rng: RngStream) -> Latent:
        if direct:
            return model.initial_xstar(p, theta, rng)
        return model.initial_latent(theta, rng)

    def step(theta: float, latent: Latent, rng: RngStream):
        if direct:
            xstar = model.update_xstar_direct(p, theta, latent, rng)
            theta = theta_driver.update(xstar, theta, rng)
            return theta, xstar
        x = x_driver.update(theta, latent, rng)
        xstar = x if identity else rp.conditional_inverse(x, theta, model.y, rng)
        theta = theta_driver.update(xstar, theta, rng)
        x = xstar if identity else rp.forward(xstar, theta, model.y)
        return theta, x

    return init, step


def run_centered(model: GibbsModel, cfg: SamplerConfig, rng: Optional[RngStream] = None) -> ChainTrace:
    """Centered-scheme chain (steps 2 and 4 are identities)."""
    return run_chain(model, replace(cfg, parametrization=CENTERED), rng)


def run_noncentered(model: GibbsModel, cfg: SamplerConfig, rng: Optional[RngStream] = None) -> ChainTrace:
    """Noncentered-scheme chain via the four-step sweep (or the direct route)."""
    p = cfg.parametrization if cfg.parametrization.kind != "centered" else NONCENTERED
    return run_chain(model, replace(cfg, parametrization=p), rng)


def run_interleaved(
    model: GibbsModel,
    cfg_centered: SamplerConfig,
    cfg_noncentered: SamplerConfig,
    rng: Optional[RngStream] = None,
    reverse: bool = False,
) -> ChainTrace:
    """Alternate a centered sweep and a noncentered sweep each iteration.

    Iteration counts, burn-in, thinning and seed come from ``cfg_centered``;
    ``cfg_noncentered`` contributes the noncentered parametrization and its
    update policies. The recorded parameter value is the one holding after
    the second sweep of the pair (the noncentered one unless ``reverse``).
    """
    pc = CENTERED
    pn = cfg_noncentered.parametrization
    if pn.kind == "centered":
        pn = NONCENTERED
    model.require_support(pc)
    model.require_support(pn)
    if rng is None:
        rng = RngStream(cfg_centered.seed, 0)

    start = time.perf_counter()
    rp = model.reparam(pn)
    theta = model.initial_theta(rng)
    x = model.initial_latent(theta, rng)

    c_theta = _ThetaDriver(model, pc, _resolve_theta_policy(model, pc, cfg_centered.theta_update), cfg_centered.burn_in)
    n_theta = _ThetaDriver(model, pn, _resolve_theta_policy(model, pn, cfg_noncentered.theta_update), cfg_centered.burn_in)
    c_x = _XDriver(model, _resolve_x_policy(model, pc, cfg_centered.x_update))
    n_x = _XDriver(model, _resolve_x_policy(model, pn, cfg_noncentered.x_update))

    kept = cfg_centered.iterations // cfg_centered.thin
    theta_out = np.empty(kept, dtype=float)
    total = cfg_centered.burn_in + cfg_centered.iterations
    k = 0
    for sweep in range(total):
        order = ("nc", "c") if reverse else ("c", "nc")
        for which in order:
            if which == "c":
                x = c_x.update(theta, x, rng)
                theta = c_theta.update(x, theta, rng)
            else:
                x = n_x.update(theta, x, rng)
                xstar = rp.conditional_inverse(x, theta, model.y, rng)
                theta = n_theta.update(xstar, theta, rng)
                x = rp.forward(xstar, theta, model.y)
        post = sweep - cfg_centered.burn_in + 1
        if post > 0 and post % cfg_centered.thin == 0 and k < kept:
            theta_out[k] = theta
            k += 1

    rates = {
        "centered_latent": c_x.tally.rate(),
        "centered_theta": c_theta.tally.rate(),
        "noncentered_latent": n_x.tally.rate(),
        "noncentered_theta": n_theta.tally.rate(),
    }
    return ChainTrace(
        model=model.name,
        parametrization=pn,  # labeled by the noncentered half; meta carries the scheme
        theta=theta_out,
        functionals={},
        acceptance_rates=rates,
        config=cfg_centered,
        wall_time=time.perf_counter() - start,
        final_theta=float(theta),
        meta={"scheme": "interleaved", "reverse": reverse},
    )
