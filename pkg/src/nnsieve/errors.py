"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Malformed or inconsistent input (shapes, empty data, bad bounds)."""


class UnsupportedDimensionError(InvalidInputError):
    pass


class DomainError(InvalidInputError):
    """A parameter lies outside the domain where a bound is defined."""


class UnsupportedSampleSizeError(InvalidInputError):
    pass


class DegenerateSampleError(InvalidInputError):
    pass
