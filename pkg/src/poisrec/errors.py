class InvalidParameterError(ValueError):
    """A numeric parameter (rate, horizon, count, ...) is outside its domain."""


class InvalidInputError(ValueError):
    """A data argument (list, grid, sample) violates its structural contract."""


class OutOfRangeError(ValueError):
    """A query time lies outside the simulated horizon."""
