"""Exception types raised across the package.

Every failure mode that callers are expected to catch gets its own class so
tests and the CLI can distinguish a bad configuration from a degenerate model
state without string matching.
"""


class GibbsLabError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(GibbsLabError, ValueError):
    """A distribution or model was built with parameters outside its domain."""


class DegenerateSupportError(GibbsLabError):
    """A truncation region carries zero probability mass at machine precision."""


class UnsupportedSpecError(GibbsLabError):
    """The requested operation is not implemented for this distribution."""


class EmptyInputError(GibbsLabError, ValueError):
    """An operation received an empty sequence where data was required."""


class LengthMismatchError(GibbsLabError, ValueError):
    """Paired inputs have different lengths."""


class UnsupportedParametrizationError(GibbsLabError):
    """The model does not register the requested parametrization."""


class DegenerateConditionalError(GibbsLabError):
    """A full conditional has collapsed to (numerically) zero variance."""


class ConstraintViolationError(GibbsLabError):
    """A deterministic data constraint makes the requested update impossible."""


class NotPositiveDefiniteError(GibbsLabError, ValueError):
    """A matrix that must be positive definite is not."""


class NonpositiveScaleError(GibbsLabError, ValueError):
    """A scale transform was evaluated at a nonpositive scale parameter."""


class NonpositiveVarianceError(GibbsLabError, ValueError):
    """A variance function returned a nonpositive value."""


class NonpositiveRatesError(GibbsLabError, ValueError):
    """Event rates for a jump process are negative or all zero."""


class InsufficientLengthError(GibbsLabError, ValueError):
    """A chain or series is too short for the requested diagnostic."""


class OutOfRangeError(GibbsLabError, ValueError):
    """A scalar argument lies outside the documented range."""


class SupportNotCoveredError(GibbsLabError):
    """A quadrature grid fails to cover the effective support of a density."""


class OracleUnavailableError(GibbsLabError):
    """An analytic quantity (conditional variance, posterior CDF) is not exposed."""


class InsufficientGridError(GibbsLabError, ValueError):
    """Fewer grid points than the operation needs."""


class InvalidScenarioError(GibbsLabError, ValueError):
    """An unknown named scenario was requested."""


class InvalidConstructionError(GibbsLabError, ValueError):
    """An unknown latent-process construction was requested."""


class StoreCorruptionError(GibbsLabError):
    """A lazy point store was queried beyond its materialized ceiling."""


class EmptyIntervalError(GibbsLabError):
    """A conditional supported on an interval found that interval empty."""


class NonfiniteTargetError(GibbsLabError):
    """A Metropolis update was started from a state with nonfinite log target."""


class ConfigError(GibbsLabError, ValueError):
    """An experiment configuration failed validation."""
