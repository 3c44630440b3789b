"""Exception types raised across the package.

Validation failures (bad shapes, bad models, bad configs) derive from
ValueError as well, so callers that only know stdlib exceptions still
catch them sensibly.  Numeric failures (non-convergence, branch loss)
derive from RuntimeError.
"""


class CorrspecError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CorrspecError, ValueError):
    """Base class for precondition and input failures."""


class DimensionError(ValidationError):
    """Shape or size precondition violated."""


class ModelError(ValidationError):
    """Field model is malformed (unknown law, bad coefficients, ...)."""


class InvalidCovarianceError(ValidationError):
    """A covariance table or spectral kernel fails its defining properties."""


class ConditionError(ValidationError):
    """A required structural condition (e.g. exchange symmetry) does not hold."""


class PlanError(ValidationError):
    """Blocking plan parameters are inconsistent with the matrix order."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain (e.g. z not in the upper half plane)."""


class ConfigError(ValidationError):
    """Run configuration failed schema validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericError(CorrspecError, RuntimeError):
    """Base class for numeric failures discovered at run time."""


class EmbeddingError(NumericError):
    """Circulant embedding produced a significantly negative spectrum."""


class ConvergenceError(NumericError):
    """Fixed-point iteration did not reach tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class BranchError(NumericError):
    """Iterate left the Herglotz class or a closed form lost its branch."""


class SupportCoverageError(NumericError):
    """Recovered spectral mass is too far from one: the grid misses support."""


class CheckFailure(NumericError):
    """A harness-level statistical assertion did not hold."""
