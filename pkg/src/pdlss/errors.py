"""Exception hierarchy shared by every module of the package."""


class PdlssError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PdlssError, ValueError):
    """Invalid parameters, grid sizes or experiment configuration."""


class ContractViolation(PdlssError, ValueError):
    """An operation was called outside its documented domain."""


class DomainError(PdlssError, ValueError):
    """A pointwise map is undefined at some sample.

    Carries the offending ``index`` and ``value``.
    """

    def __init__(self, message, index=None, value=None):
        super().__init__(message)
        self.index = index
        self.value = value


class PositivityError(PdlssError):
    """A density dropped below the allowed negative floor."""

    def __init__(self, message, t=None, index=None, value=None):
        super().__init__(message)
        self.t = t
        self.index = index
        self.value = value


class InstabilityError(PdlssError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DegenerateInputError(PdlssError, ValueError):
    """Zero mass or zero variance where a normalisable density is required."""


class FitError(PdlssError, ValueError):
    """Too few samples for a least-squares fit."""


class SolverError(PdlssError):
    """A nonlinear solve failed to converge; ``residual`` holds the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RangeError(PdlssError, ValueError):
    """Argument outside the supported evaluation range."""


class ConsistencyError(PdlssError):
    """An internal invariant failed (signals a transcription or numerical bug)."""
