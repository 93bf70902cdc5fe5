"""Exception hierarchy shared across the package."""


class LapError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(LapError, ValueError):
    """A distribution or solver parameter is outside its valid domain."""


class DomainError(LapError, ValueError):
    """A function argument (probability, correlation, ...) is out of range."""


class NotPositiveDefiniteError(LapError, ValueError):
    """A matrix required to be positive definite is not."""


class InfeasibleError(LapError, ValueError):
    """Elicited answers admit no solution (e.g. Lomax tertile ratio bound)."""


class InconsistentAnswersError(LapError, ValueError):
    """A multi-answer solve has no root; carries the residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class GlobalIncoherenceError(LapError, ValueError):
    """Fixed correlations are jointly incoherent; lists offending minors."""

    def __init__(self, message, minors=None):
        super().__init__(message)
        self.minors = minors or []


class ConfigurationError(LapError, ValueError):
    """A model/belief/sampler configuration does not fit together."""


class IngestionError(LapError, ValueError):
    """Malformed input data rows; carries offending row numbers."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows or []


class InitializationError(LapError, RuntimeError):
    """No finite starting point found for a chain."""


class AdaptationError(LapError, RuntimeError):
    """Warmup adaptation failed (e.g. every proposal rejected)."""
