"""Exception types shared across the package."""


class CapacityLabError(Exception):
    """Base class for package-specific errors."""


class ModelDomainError(CapacityLabError, ValueError):
    """A point, radius or parameter lies outside a model's validity domain."""


class ModelValidationError(CapacityLabError, ValueError):
    """A model failed its construction-time consistency checks."""


class UnsupportedMethodError(CapacityLabError, ValueError):
    """The requested computation method does not apply to this model."""


class SolverConvergenceError(CapacityLabError, RuntimeError):
    """The iterative solver failed to converge.

    ``diagnostics`` carries iteration count, final energy and residual data
    for post-mortem inspection.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(CapacityLabError, ValueError):
    """An experiment configuration failed validation."""
