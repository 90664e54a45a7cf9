"""Exception types raised by stochmesh."""


class StochMeshError(Exception):
    """Base class for all library errors."""


class DegenerateMeshError(StochMeshError, ValueError):
    """A mesh has (numerically) coincident points."""


class SingularOperatorError(StochMeshError, ArithmeticError):
    """A discrete operator could not be inverted."""


class NonlinearSolverError(StochMeshError, RuntimeError):
    """An iterative nonlinear solve did not converge."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class InsufficientDataError(StochMeshError, ValueError):
    """Too few samples to estimate a statistic."""


class DegenerateCriterionError(StochMeshError, ValueError):
    """A mapping integrand vanishes identically."""


class InvalidStateError(StochMeshError, RuntimeError):
    """An object was used in a state that does not support the operation."""


class SampleFailureError(StochMeshError, RuntimeError):
    """Too many sampled solves failed during a sampling sweep."""
