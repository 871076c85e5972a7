"""Exception types shared across the package."""


class InMarginError(Exception):
    """Base class for errors raised by this package."""


class UnsupportedKernelError(InMarginError):
    """An operation was requested for a kernel family that cannot support it."""


class InvalidMetricError(InMarginError):
    """A metric matrix is not symmetric positive definite or is malformed."""


class DegenerateGradientError(InMarginError):
    """The discriminant gradient vanished where a direction was required."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = list(indices) if indices is not None else []


class DegenerateSolutionError(InMarginError):
    """A dual solution carries no support vectors, so no model can be built."""


class ConvergenceError(InMarginError):
    """An iterative solver stopped before reaching its tolerance."""


class InfeasibleProblemError(InMarginError):
    """The optimization problem has no feasible point for the requested data."""


class ProjectionFailure(InMarginError):
    """The hyperplane least-squares projection could not produce coefficients."""


class DataFormatError(InMarginError):
    """A data file is malformed (bad header, bad row, or bad label)."""
