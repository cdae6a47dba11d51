"""Test-model suite: hierarchical models with registered parametrizations."""

from __future__ import annotations

from typing import Dict, Type

from ..errors import InvalidParameterError
from ..model import GibbsModel
from .chains import GaussianHmmModel, build_gaussian_hmm
from .classification import ClassificationMixtureModel, build_classification
from .diffusion import ObservedDiffusionModel, build_observed_diffusion
from .gmrf import GmrfHybridModel, build_gmrf_hybrid, lattice_precision
from .heavy_tail import HeavyTailHmmModel, build_heavy_tail_hmm, figure_surface
from .jump_process import JumpPath, simulate_jump_transform
from .location import RepeatedMeasurementsModel, build_repeated_measurements
from .point_process import LatentPoissonModel, LazyPointStore, build_latent_poisson
from .stick_breaking import StickBreakingModel, build_stick_breaking
from .truncation import (
    NonregularScaleModel,
    RoundedDataModel,
    StochasticFrontierModel,
    build_nonregular_scale,
    build_rounded_data,
    build_stochastic_frontier,
)
from .volatility import DiscretizedSvModel, build_discretized_sv

MODEL_REGISTRY: Dict[str, Type[GibbsModel]] = {
    cls.name: cls
    for cls in (
        RepeatedMeasurementsModel,
        GaussianHmmModel,
        NonregularScaleModel,
        StochasticFrontierModel,
        RoundedDataModel,
        ClassificationMixtureModel,
        HeavyTailHmmModel,
        DiscretizedSvModel,
        StickBreakingModel,
        LatentPoissonModel,
        ObservedDiffusionModel,
        GmrfHybridModel,
    )
}


def get_model(name: str) -> Type[GibbsModel]:
    try:
        return MODEL_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise InvalidParameterError(f"unknown model {name!r}; known: {known}") from None


__all__ = [
    "MODEL_REGISTRY",
    "get_model",
    "RepeatedMeasurementsModel",
    "GaussianHmmModel",
    "NonregularScaleModel",
    "StochasticFrontierModel",
    "RoundedDataModel",
    "ClassificationMixtureModel",
    "HeavyTailHmmModel",
    "DiscretizedSvModel",
    "StickBreakingModel",
    "LatentPoissonModel",
    "ObservedDiffusionModel",
    "GmrfHybridModel",
    "LazyPointStore",
    "JumpPath",
    "simulate_jump_transform",
    "figure_surface",
    "lattice_precision",
    "build_repeated_measurements",
    "build_gaussian_hmm",
    "build_nonregular_scale",
    "build_stochastic_frontier",
    "build_rounded_data",
    "build_classification",
    "build_heavy_tail_hmm",
    "build_discretized_sv",
    "build_stick_breaking",
    "build_latent_poisson",
    "build_observed_diffusion",
    "build_gmrf_hybrid",
]
