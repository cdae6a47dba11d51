"""Gibbs-sampling laboratory for comparing hierarchical-model parametrizations.

The package pairs a two-block Gibbs engine with interchangeable centered,
noncentered, partially noncentered, and data-based parametrizations, a zoo
of small hierarchical models whose conditionals are known exactly, and
diagnostics that turn chain output into mixing-complexity measurements.
"""

from .engine import (
    ChainTrace,
    ExactConditional,
    GridInverseCDF,
    PathCrankNicolson,
    RandomWalkMH,
    SamplerConfig,
    SingleSiteMH,
    run_centered,
    run_chain,
    run_interleaved,
    run_noncentered,
)
from .model import GibbsModel
from .reparam import CENTERED, NONCENTERED, Parametrization, Reparametrization
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "CENTERED",
    "NONCENTERED",
    "ChainTrace",
    "ExactConditional",
    "GibbsModel",
    "GridInverseCDF",
    "Parametrization",
    "PathCrankNicolson",
    "RandomWalkMH",
    "Reparametrization",
    "RngStream",
    "SamplerConfig",
    "SingleSiteMH",
    "run_centered",
    "run_chain",
    "run_interleaved",
    "run_noncentered",
    "__version__",
]
