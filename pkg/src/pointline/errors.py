"""Exception types shared across the package."""


class PointLineError(ValueError):
    """Base class for invalid-input conditions."""


class ParallelLinesError(PointLineError):
    """Two lines have no unique intersection."""


class DegenerateConstraintError(PointLineError):
    """A circle constraint |a^T y - b| has a = 0, so every unit y is optimal."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite or otherwise unusable result."""
