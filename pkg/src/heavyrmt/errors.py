"""Exception hierarchy shared by every module."""


class HeavyRMTError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HeavyRMTError, ValueError):
    """Invalid ensemble, kernel, or experiment parameters."""


class CapacityError(HeavyRMTError):
    """A request exceeds the memory or enumeration budget."""


class DomainError(HeavyRMTError, ValueError):
    """An argument lies outside the domain of the function."""


class SolverError(HeavyRMTError, RuntimeError):
    """A fixed-point or linear solve failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UnsupportedFamilyError(HeavyRMTError, NotImplementedError):
    """The operation is not available for this ensemble family."""


class DegenerateStatisticError(HeavyRMTError, ValueError):
    """A statistic has zero spread, so no variance-based fit is possible."""
