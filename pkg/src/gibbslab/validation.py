"""Brute-force cross-checks of every closed-form conditional a model declares.

Each registered model states its conditionals three ways: a sampler, a CDF,
and a log density (plus the full log joint). These statements are redundant,
which is the point: the checks here integrate the log densities numerically
on dense grids and demand that the closed-form CDFs, the conditional moments
and the samplers agree with the quadrature. Blocks that are updated by
Metropolis steps, or that refuse to run by design, are reported as skips
with the reason spelled out rather than silently ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import (
    ConstraintViolationError,
    DegenerateConditionalError,
    OracleUnavailableError,
)
from .model import GibbsModel
from .reparam import Parametrization
from .rng import RngStream

__all__ = ["CheckResult", "validate_model", "validate_all", "default_fixtures"]

SUP_TOL = 1e-3        # sup-CDF agreement between closed form and quadrature
VAR_RTOL = 5e-3       # conditional moments against quadrature moments
ALPHA = 1e-4          # statistical checks on samplers
_THETA_GRID = 200_001
_X_GRID = 60_001
_THETA_DRAWS = 4000
_X_DRAWS = 1500
_WINDOW_DRAWS = 400
_COVER = 1e-8         # density at an open window edge, relative to the peak


@dataclass
class CheckResult:
    fixture: str
    parametrization: str
    check: str
    status: str            # "ok" | "fail" | "skipped"
    error: float = float("nan")
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def line(self) -> str:
        err = "" if math.isnan(self.error) else f" err={self.error:.3e}"
        tail = f" ({self.detail})" if self.detail else ""
        return (f"{self.status.upper():7s} {self.fixture:28s} "
                f"{self.parametrization:18s} {self.check}{err}{tail}")


def _cum_trapz(w: np.ndarray, grid: np.ndarray) -> Tuple[np.ndarray, float]:
    cell = 0.5 * (w[1:] + w[:-1]) * np.diff(grid)
    cum = np.concatenate(([0.0], np.cumsum(cell)))
    return cum, float(cum[-1])


def _warped_grid(center: float, spread: float, reach: float, n: int,
                 support: Tuple[float, float]) -> np.ndarray:
    """Tan-warped grid: dense near the center, reaching +-reach."""
    a = math.atan2(reach, spread)
    grid = center + spread * np.tan(np.linspace(-a, a, n))
    lo_s, hi_s = support
    lo = grid[0] if not math.isfinite(lo_s) else max(grid[0], lo_s)
    hi = grid[-1] if not math.isfinite(hi_s) else min(grid[-1], hi_s)
    inner = grid[(grid > lo) & (grid < hi)]
    return np.unique(np.concatenate(([lo], inner, [hi])))


def _at_bound(value: float, support: Tuple[float, float]) -> bool:
    lo_s, hi_s = support
    return ((math.isfinite(lo_s) and value <= lo_s + 1e-12 * max(1.0, abs(lo_s)))
            or (math.isfinite(hi_s) and value >= hi_s - 1e-12 * max(1.0, abs(hi_s))))


def _theta_quadrature(logf: Callable[[float], float], draws: np.ndarray,
                      support: Tuple[float, float]):
    """Dense grid plus normalized trapezoid CDF for a parameter conditional.

    The window starts from sampler quantiles and widens until the density at
    any open edge is negligible next to the peak.
    """
    q = np.quantile(draws, [0.005, 0.25, 0.5, 0.75, 0.995])
    center = float(q[2])
    spread = max(q[3] - q[1], 1e-9 * max(1.0, abs(center)), 1e-12)
    reach = max(30.0 * (q[4] - q[0]), 100.0 * spread)

    for _ in range(5):
        probe = _warped_grid(center, spread, reach, 4001, support)
        lp = np.array([logf(float(t)) for t in probe])
        top = np.max(lp)
        if not math.isfinite(top):
            raise ValueError("conditional log density has no finite values on the window")
        rel = np.exp(lp - top)
        lo_bad = rel[0] > _COVER and not _at_bound(float(probe[0]), support)
        hi_bad = rel[-1] > _COVER and not _at_bound(float(probe[-1]), support)
        if not (lo_bad or hi_bad):
            break
        reach *= 8.0
    else:
        raise ValueError("could not enclose the conditional density in a finite window")

    grid = _warped_grid(center, spread, reach, _THETA_GRID, support)
    lp = np.array([logf(float(t)) for t in grid])
    w = np.exp(lp - np.max(lp))
    cum, total = _cum_trapz(w, grid)
    if not (total > 0 and math.isfinite(total)):
        raise ValueError("conditional density integrates to zero or overflows")
    return grid, w / total, cum / total


def _grid_moments(grid: np.ndarray, dens: np.ndarray) -> Tuple[float, float]:
    m1 = float(np.trapezoid(dens * grid, grid))
    m2 = float(np.trapezoid(dens * grid * grid, grid))
    return m1, m2 - m1 * m1


def _substitute(x, i: int, v: float):
    vec = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    vec[i] = v
    return vec if np.ndim(x) > 0 else float(vec[0])


# ---------------------------------------------------------------------------
# Latent-side checks (natural coordinates, parametrization-free)
# ---------------------------------------------------------------------------


def _settle(model: GibbsModel, rng: RngStream):
    """A (theta, x) pair with positive posterior density, natural coords."""
    p0 = model.supported_parametrizations()[0]
    if "four_step" not in model.latent_update_modes(p0):
        return None
    theta = model.initial_theta(rng)
    x = model.initial_latent(theta, rng)
    for _ in range(3):
        try:
            x = model.draw_x_exact(theta, x, rng)
        except OracleUnavailableError:
            break
    return theta, x


def _latent_checks(model: GibbsModel, fixture: str, state, rng: RngStream) -> List[CheckResult]:
    if state is None:
        reason = "latent state is not a coordinate vector"
        return [
            CheckResult(fixture, "-", "x-site-cdf", "skipped", detail=reason),
            CheckResult(fixture, "-", "x-draw-pit", "skipped", detail=reason),
        ]
    theta, x = state
    vec = np.atleast_1d(np.asarray(x, dtype=float))
    sites = range(min(vec.size, 4))
    out: List[CheckResult] = []

    try:
        model.x_conditional_cdf(theta, x, 0, float(vec[0]))
        have_cdf = True
    except OracleUnavailableError as e:
        have_cdf = False
        out.append(CheckResult(fixture, "-", "x-site-cdf", "skipped", detail=str(e)))
        out.append(CheckResult(fixture, "-", "x-draw-pit", "skipped", detail=str(e)))
    if not have_cdf:
        return out

    discrete = bool(getattr(model, "discrete_latent", False))

    # closed-form site CDF against quadrature of the log joint
    try:
        worst, worst_site = 0.0, 0
        for i in sites:
            if discrete:
                values = np.asarray(model.latent_values, dtype=float)
                lj = np.array([model.log_joint(_substitute(x, i, v), theta) for v in values])
                pm = np.exp(lj - np.max(lj))
                cdf_joint = np.cumsum(pm / pm.sum())
                cdf_model = np.array([
                    float(model.x_conditional_cdf(theta, x, i, v)) for v in values])
            else:
                draws = np.array([
                    np.atleast_1d(np.asarray(model.draw_x_exact(theta, x, rng), dtype=float))[i]
                    for _ in range(_WINDOW_DRAWS)])
                q = np.quantile(draws, [0.005, 0.995])
                width = max(q[1] - q[0], 1e-9)
                grid = np.linspace(q[0] - 10.0 * width, q[1] + 10.0 * width, _X_GRID)
                lj = np.array([model.log_joint(_substitute(x, i, v), theta) for v in grid])
                top = np.max(lj)
                if not math.isfinite(top):
                    raise ValueError(f"log joint nonfinite across the site {i} window")
                cum, total = _cum_trapz(np.exp(lj - top), grid)
                cdf_joint = cum / total
                cdf_model = np.asarray(model.x_conditional_cdf(theta, x, i, grid), dtype=float)
            sup = float(np.max(np.abs(cdf_joint - cdf_model)))
            if sup > worst:
                worst, worst_site = sup, i
        status = "ok" if worst < SUP_TOL else "fail"
        out.append(CheckResult(fixture, "-", "x-site-cdf", status, error=worst,
                               detail=f"worst site {worst_site} of {vec.size}"))
    except OracleUnavailableError as e:
        out.append(CheckResult(fixture, "-", "x-site-cdf", "skipped", detail=str(e)))

    # sampler against the site CDFs: conditional probability transform
    try:
        if discrete:
            values = np.asarray(model.latent_values, dtype=float)
            lo_val = float(values[0])
            worst, worst_site = 0.0, 0
            hits = np.zeros(len(list(sites)))
            p_low = np.zeros(len(list(sites)))
            for k in range(_X_DRAWS):
                d = model.draw_x_exact(theta, x, rng)
                dv = np.atleast_1d(np.asarray(d, dtype=float))
                for j, i in enumerate(sites):
                    hits[j] += float(dv[i] == lo_val)
                    if k == 0:
                        p_low[j] = float(model.x_conditional_cdf(theta, d, i, lo_val))
            for j, i in enumerate(sites):
                se = math.sqrt(max(p_low[j] * (1 - p_low[j]), 1e-12) / _X_DRAWS)
                z = abs(hits[j] / _X_DRAWS - p_low[j]) / se
                if z > worst:
                    worst, worst_site = z, i
            status = "ok" if worst < 4.5 else "fail"
            out.append(CheckResult(fixture, "-", "x-draw-pit", status, error=worst,
                                   detail=f"binomial z, worst site {worst_site}"))
        else:
            pits = [[] for _ in sites]
            for _ in range(_X_DRAWS):
                d = model.draw_x_exact(theta, x, rng)
                dv = np.atleast_1d(np.asarray(d, dtype=float))
                for j, i in enumerate(sites):
                    pits[j].append(float(model.x_conditional_cdf(theta, d, i, float(dv[i]))))
            worst_p, worst_site = 1.0, 0
            for j, i in enumerate(sites):
                pv = stats.kstest(np.asarray(pits[j]), "uniform").pvalue
                if pv < worst_p:
                    worst_p, worst_site = pv, i
            bar = ALPHA / max(len(list(sites)), 1)
            status = "ok" if worst_p >= bar else "fail"
            out.append(CheckResult(fixture, "-", "x-draw-pit", status, error=worst_p,
                                   detail=f"KS p-value, worst site {worst_site}"))
    except OracleUnavailableError as e:
        out.append(CheckResult(fixture, "-", "x-draw-pit", "skipped", detail=str(e)))
    return out


# ---------------------------------------------------------------------------
# Parameter-side checks (per parametrization)
# ---------------------------------------------------------------------------


def _theta_checks(model: GibbsModel, fixture: str, p: Parametrization,
                  state, rng: RngStream) -> List[CheckResult]:
    label = p.label()
    names = ("theta-cdf", "theta-draw", "theta-variance")

    def all_skipped(reason: str) -> List[CheckResult]:
        return [CheckResult(fixture, label, c, "skipped", detail=reason) for c in names]

    if not model.has_exact_theta(p):
        return all_skipped("parameter update is Metropolis under this scheme")
    if state is None:
        return all_skipped("no settled working state for a direct-route model")

    theta, x = state
    rp = model.reparam(p)
    xstar = x if rp.name == "identity" else rp.conditional_inverse(x, theta, model.y, rng)

    try:
        draws = np.array([model.draw_theta_exact(p, xstar, rng) for _ in range(_THETA_DRAWS)])
    except (DegenerateConditionalError, ConstraintViolationError) as e:
        return all_skipped(f"update refuses by design ({type(e).__name__})")

    out: List[CheckResult] = []
    try:
        grid, dens, cdf_grid = _theta_quadrature(
            lambda t: model.log_theta_conditional(p, xstar, t), draws, model.theta_support())
        cdf_model = np.asarray(model.theta_conditional_cdf(p, xstar, grid), dtype=float)
        sup = float(np.max(np.abs(cdf_grid - cdf_model)))
        out.append(CheckResult(fixture, label, "theta-cdf",
                               "ok" if sup < SUP_TOL else "fail", error=sup))
    except (OracleUnavailableError, ValueError) as e:
        out.append(CheckResult(fixture, label, "theta-cdf", "skipped", detail=str(e)))
        grid = None

    try:
        u = np.asarray(model.theta_conditional_cdf(p, xstar, draws), dtype=float)
        pv = stats.kstest(u, "uniform").pvalue
        out.append(CheckResult(fixture, label, "theta-draw",
                               "ok" if pv >= ALPHA else "fail", error=pv,
                               detail="KS p-value of the probability transform"))
    except OracleUnavailableError as e:
        out.append(CheckResult(fixture, label, "theta-draw", "skipped", detail=str(e)))

    try:
        v_model = float(model.theta_conditional_variance(p, xstar))
        if not math.isfinite(v_model):
            out.append(CheckResult(fixture, label, "theta-variance", "skipped",
                                   detail="conditional variance is infinite here"))
        elif grid is None:
            out.append(CheckResult(fixture, label, "theta-variance", "skipped",
                                   detail="no quadrature grid available"))
        else:
            _, v_grid = _grid_moments(grid, dens)
            err = abs(v_model - v_grid) / max(v_grid, 1e-300)
            out.append(CheckResult(fixture, label, "theta-variance",
                                   "ok" if err < VAR_RTOL else "fail", error=err))
    except OracleUnavailableError as e:
        out.append(CheckResult(fixture, label, "theta-variance", "skipped", detail=str(e)))
    return out


# ---------------------------------------------------------------------------
# Transform-pair checks
# ---------------------------------------------------------------------------


def _map_checks(model: GibbsModel, fixture: str, p: Parametrization,
                state, rng: RngStream) -> List[CheckResult]:
    label = p.label()
    out: List[CheckResult] = []
    if "four_step" not in model.latent_update_modes(p):
        return [CheckResult(fixture, label, "map-roundtrip", "skipped",
                            detail="direct-route scheme has no coordinate map")]
    theta, x = state
    rp = model.reparam(p)

    xstar = rp.conditional_inverse(x, theta, model.y, rng)
    x_back = rp.forward(xstar, theta, model.y)
    err = float(np.max(np.abs(np.atleast_1d(np.asarray(x_back, dtype=float))
                              - np.atleast_1d(np.asarray(x, dtype=float)))))
    scale = float(np.max(np.abs(np.atleast_1d(np.asarray(x, dtype=float))))) + 1.0
    out.append(CheckResult(fixture, label, "map-roundtrip",
                           "ok" if err <= 1e-8 * scale else "fail", error=err))

    if p.kind != "noncentered":
        return out

    try:
        ta = float(model.initial_theta(rng))
        tb = ta
        for _ in range(20):
            tb = float(model.initial_theta(rng))
            if abs(tb - ta) > 1e-3 * (abs(ta) + 1.0):
                break
        def batch(tv: float) -> Tuple[np.ndarray, np.ndarray]:
            first, sums = [], []
            for _ in range(800):
                xp = model.draw_x_prior(tv, rng)
                xs = np.atleast_1d(np.asarray(
                    rp.conditional_inverse(xp, tv, model.y, rng), dtype=float))
                first.append(float(xs[0]))
                sums.append(float(np.sum(xs)))
            return np.asarray(first), np.asarray(sums)
        fa, sa = batch(ta)
        fb, sb = batch(tb)
        pv = stats.ks_2samp(fa, fb).pvalue
        if fa.size and not np.allclose(sa, fa):
            pv = min(pv, stats.ks_2samp(sa, sb).pvalue)
        out.append(CheckResult(fixture, label, "map-prior-free",
                               "ok" if pv >= ALPHA else "fail", error=pv,
                               detail=f"two-sample KS across theta {ta:.3g} vs {tb:.3g}"))
    except (NotImplementedError, OracleUnavailableError):
        out.append(CheckResult(fixture, label, "map-prior-free", "skipped",
                               detail="no latent prior sampler"))
    return out


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def validate_model(model: GibbsModel, parametrizations: Optional[Sequence[Parametrization]] = None,
                   seed: int = 0, label: Optional[str] = None) -> List[CheckResult]:
    """All cross-checks for one model; never raises on a mismatch."""
    fixture = label if label is not None else model.name
    rng = RngStream(seed, 17)
    state = _settle(model, rng)
    results = _latent_checks(model, fixture, state, rng)
    for p in (parametrizations or model.supported_parametrizations()):
        results.extend(_theta_checks(model, fixture, p, state, rng))
        results.extend(_map_checks(model, fixture, p, state, rng))
    return results


def default_fixtures(seed: int = 0):
    """Small instances of every registered model, sized for dense quadrature."""
    from .models import (
        ClassificationMixtureModel,
        DiscretizedSvModel,
        GaussianHmmModel,
        GmrfHybridModel,
        HeavyTailHmmModel,
        LatentPoissonModel,
        NonregularScaleModel,
        ObservedDiffusionModel,
        RepeatedMeasurementsModel,
        RoundedDataModel,
        StickBreakingModel,
        StochasticFrontierModel,
    )

    s = int(seed)
    fixtures = [
        ("repeated_measurements", RepeatedMeasurementsModel.synthesize(n=3, theta_star=1.0, data_seed=s + 1)),
        ("gaussian_hmm", GaussianHmmModel.synthesize(n=3, theta_star=0.5, data_seed=s + 2, rho=0.6)),
        ("gaussian_hmm[nodata]", GaussianHmmModel(None, n=3, rho=0.0)),
        ("nonregular_scale", NonregularScaleModel.synthesize(n=3, theta_star=2.0, data_seed=s + 3)),
        ("stochastic_frontier", StochasticFrontierModel.synthesize(n=3, theta_star=1.0, data_seed=s + 4)),
        ("rounded_data", RoundedDataModel.synthesize(n=3, theta_star=0.3, data_seed=s + 5)),
    ]
    for scenario in ("general", "disjoint", "identical"):
        fixtures.append((f"classification[{scenario}]",
                         ClassificationMixtureModel.synthesize(
                             n=3, theta_star=0.4, data_seed=s + 6, scenario=scenario)))
    fixtures += [
        ("heavy_tail_hmm[cauchy-obs]",
         HeavyTailHmmModel.synthesize(n=1, theta_star=0.0, data_seed=s + 7, direction="cauchy-obs")),
        ("heavy_tail_hmm[cauchy-latent]",
         HeavyTailHmmModel.synthesize(n=3, theta_star=0.0, data_seed=s + 8, direction="cauchy-latent")),
        ("discretized_sv", DiscretizedSvModel.synthesize(n=3, theta_star=1.0, data_seed=s + 9)),
        ("stick_breaking", StickBreakingModel(n=3)),
        ("latent_poisson", LatentPoissonModel(n_obs=2)),
        ("observed_diffusion", ObservedDiffusionModel.synthesize(n=3, theta_star=1.0, data_seed=s + 10)),
        ("gmrf_hybrid", GmrfHybridModel.synthesize(side=2, n_obs=1, theta_star=0.0, data_seed=s + 11)),
    ]
    return fixtures


def validate_all(seed: int = 0) -> List[CheckResult]:
    results: List[CheckResult] = []
    for label, model in default_fixtures(seed):
        results.extend(validate_model(model, seed=seed, label=label))
    return results
