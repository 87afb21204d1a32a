"""Exception types raised across the package."""


class BilapError(Exception):
    """Base class for errors raised by this package."""


class DegeneratePotential(BilapError, ValueError):
    pass


class PotentialFormatError(BilapError, ValueError):
    pass


class IllConditioned(BilapError):
    """A null-space decision singular value fell inside the gray band."""

    def __init__(self, message, singular_values=None, level=None):
        super().__init__(message)
        self.singular_values = singular_values
        self.level = level


class OutOfRange(BilapError, ValueError):
    pass


class NearSingular(BilapError):
    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class EmptyProjection(BilapError):
    pass


class QuadratureFailure(BilapError):
    pass


class NotConverged(BilapError):
    pass


class NoRoot(BilapError, ValueError):
    pass


class NotFundamentalSolution(BilapError, ValueError):
    pass
