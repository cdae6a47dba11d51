"""Base class and capability contract for Gibbs-sampled hierarchical models.

A model owns its data ``y`` and exposes, per supported parametrization:

* a latent update for the natural (centered) coordinates, exact or via one
  of the Metropolis policies the engine implements;
* the transform pair (:class:`~gibbslab.reparam.Reparametrization`) between
  natural and working coordinates, identity for the centered scheme;
* a parameter update given the working latent: an exact conditional draw
  where tractable, otherwise a log conditional density the engine can feed
  to a random-walk or grid step.

Optional analytic oracles (posterior CDF of the parameter, conditional
variance of the parameter given the working latent) power diagnostics and
the validation suite; models raise :class:`OracleUnavailableError` where an
oracle does not exist rather than approximating silently.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import OracleUnavailableError, UnsupportedParametrizationError
from .reparam import CENTERED, Parametrization, Reparametrization, identity_reparam
from .rng import RngStream

__all__ = ["GibbsModel", "Latent"]

Latent = Any


class GibbsModel:
    """Abstract two-block hierarchical model.

    Subclasses must set ``name`` and implement the latent and parameter
    updates for every parametrization they register. Latent states are
    opaque to the engine: arrays for most models, richer objects where the
    latent is a point process.
    """

    name: str = "abstract"

    def __init__(self):
        self.y: Any = None

    # -- capability surface --------------------------------------------------

    def supported_parametrizations(self) -> Tuple[Parametrization, ...]:
        raise NotImplementedError

    def supports(self, p: Parametrization) -> bool:
        for q in self.supported_parametrizations():
            if q.kind == p.kind == "partial" and q.weight is not None:
                # a registered scalar-weight family admits any weight
                if p.weight is not None:
                    return True
                continue
            if q == p:
                return True
        return False

    def require_support(self, p: Parametrization) -> None:
        if not self.supports(p):
            raise UnsupportedParametrizationError(
                f"{self.name} does not register parametrization {p.label()}"
            )

    def reparam(self, p: Parametrization) -> Reparametrization:
        """Transform pair for ``p``; identity for the centered scheme."""
        if p == CENTERED:
            return identity_reparam()
        raise NotImplementedError

    # -- initialization -------------------------------------------------------

    def theta_support(self) -> Tuple[float, float]:
        return (-np.inf, np.inf)

    def initial_theta(self, rng: RngStream) -> float:
        raise NotImplementedError

    def initial_latent(self, theta: float, rng: RngStream) -> Latent:
        """Starting latent state in natural coordinates.

        Defaults to a prior draw; models whose likelihood constrains the
        latent support override this to start at a feasible state.
        """
        return self.draw_x_prior(theta, rng)

    # -- latent block (natural coordinates) ----------------------------------

    def draw_x_prior(self, theta: float, rng: RngStream) -> Latent:
        raise NotImplementedError

    def draw_x_exact(self, theta: float, x: Latent, rng: RngStream) -> Latent:
        raise OracleUnavailableError(f"{self.name} has no exact latent conditional")

    x_sites_independent: bool = True

    def x_site_log_targets(self, theta: float, x: np.ndarray) -> np.ndarray:
        """Per-site log conditional targets when sites are independent."""
        raise OracleUnavailableError(f"{self.name} exposes no sitewise targets")

    def log_x_site_conditional(self, theta: float, x: np.ndarray, i: int, v: float) -> float:
        """Log conditional of site ``i`` at value ``v`` given the rest."""
        raise OracleUnavailableError(f"{self.name} exposes no site conditionals")

    def sitewise_x_update(self, theta: float, x: np.ndarray, step_sd: float,
                          repeats: int, rng: RngStream):
        """Optional specialized single-site Metropolis sweep.

        Models whose site conditionals share running state (a global
        sufficient statistic, say) can implement the whole pass here in O(n)
        and return ``(x, accepted, proposed)``; returning None defers to the
        engine's generic sitewise loop.
        """
        return None

    def x_step_hint(self, theta: float) -> float:
        return 1.0

    def x_prior_mean(self, theta: float) -> Any:
        return 0.0

    def log_likelihood_x(self, x: Latent, theta: float) -> float:
        """Log observation density given the latent (for pCN-style updates)."""
        raise OracleUnavailableError(f"{self.name} exposes no separated likelihood")

    # -- direct working-coordinate path ---------------------------------------

    def latent_update_modes(self, p: Parametrization) -> Tuple[str, ...]:
        """Which step-1 routes exist: ``"four_step"`` and/or ``"direct"``."""
        return ("four_step",)

    def initial_xstar(self, p: Parametrization, theta: float, rng: RngStream) -> Latent:
        x = self.initial_latent(theta, rng)
        return self.reparam(p).conditional_inverse(x, theta, self.y, rng)

    def update_xstar_direct(
        self, p: Parametrization, theta: float, xstar: Latent, rng: RngStream
    ) -> Latent:
        raise OracleUnavailableError(f"{self.name} has no direct working-latent update")

    # -- parameter block -------------------------------------------------------

    def has_exact_theta(self, p: Parametrization) -> bool:
        return False

    def draw_theta_exact(self, p: Parametrization, xstar: Latent, rng: RngStream) -> float:
        raise OracleUnavailableError(
            f"{self.name} has no exact parameter conditional under {p.label()}"
        )

    def log_theta_conditional(self, p: Parametrization, xstar: Latent, theta: float) -> float:
        raise OracleUnavailableError(
            f"{self.name} exposes no parameter log conditional under {p.label()}"
        )

    def theta_grid(self, p: Parametrization) -> Tuple[np.ndarray, Tuple[bool, bool]]:
        """Default quadrature grid for grid-based parameter updates.

        Returns the grid and a pair of flags marking which endpoints are
        hard support boundaries (exempt from the tail-coverage check).
        """
        raise OracleUnavailableError(f"{self.name} provides no default parameter grid")

    def theta_step_hint(self) -> float:
        return 1.0

    def default_theta_update(self, p: Parametrization):
        """Engine policy used when the sampler config leaves it unset.

        None means draw from the exact conditional.
        """
        return None

    def default_x_update(self, p: Parametrization):
        return None

    # -- analytic oracles -------------------------------------------------------

    def theta_conditional_variance(self, p: Parametrization, xstar: Latent) -> float:
        raise OracleUnavailableError(
            f"{self.name} has no conditional-variance oracle under {p.label()}"
        )

    def theta_posterior_cdf(self, t) -> Any:
        raise OracleUnavailableError(f"{self.name} has no posterior CDF oracle")

    def theta_conditional_cdf(self, p: Parametrization, xstar: Latent, t) -> Any:
        """CDF of the exact parameter conditional, for brute-force validation."""
        raise OracleUnavailableError(
            f"{self.name} has no parameter conditional CDF under {p.label()}"
        )

    def x_conditional_cdf(self, theta: float, x: Latent, i: int, v) -> Any:
        """CDF of site ``i``'s conditional given the rest, for validation."""
        raise OracleUnavailableError(f"{self.name} has no latent conditional CDF")

    def log_joint(self, x: Latent, theta: float) -> float:
        """Joint log density of (x, theta, y) up to a constant."""
        raise OracleUnavailableError(f"{self.name} exposes no joint log density")

    # -- bookkeeping --------------------------------------------------------------

    def functionals(self) -> Dict[str, Callable[[float, Latent], float]]:
        """Named scalar functionals of (theta, latent) available for recording."""
        return {}

    def data_center(self) -> float:
        y = np.asarray(self.y, dtype=float) if self.y is not None else None
        if y is None or y.size == 0:
            return 0.0
        return float(np.median(y))
