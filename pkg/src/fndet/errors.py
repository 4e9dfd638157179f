"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes of tensors, boxes or feature vectors do not line up."""


class FormatError(ValueError):
    """A binary file has a bad magic, is truncated, or carries trailing bytes."""


class UndefinedMetricError(ArithmeticError):
    """A ratio metric was requested with a zero denominator."""


class GenerationError(RuntimeError):
    """Scene generation could not place the requested objects."""
