"""Exception hierarchy. The CLI prints the class name of any of these on failure."""


class PortraitError(Exception):
    """Base class for every computational failure raised by the package."""


class ConstantProfile(PortraitError):
    pass


class InvalidSize(PortraitError, ValueError):
    pass


class NonPositiveEpsilon(PortraitError, ValueError):
    pass


class DimensionMismatch(PortraitError, ValueError):
    pass


class NoConvergence(PortraitError):
    def __init__(self, message, failed_indices=()):
        super().__init__(message)
        self.failed_indices = tuple(failed_indices)


class MismatchedProblem(PortraitError, ValueError):
    pass


class MissingVector(PortraitError, ValueError):
    pass


class BranchAmbiguity(PortraitError):
    pass


class PathThroughTurningPoint(PortraitError, ValueError):
    pass


class DegenerateTurningPoints(PortraitError, ValueError):
    pass


class BranchMismatch(PortraitError):
    pass


class SeedNotOnCurve(PortraitError):
    pass


class SingularGradient(PortraitError):
    pass


class NoTraceableCurve(PortraitError):
    pass


class IndexOutOfRange(PortraitError, IndexError):
    pass


class EmptyGraph(PortraitError, ValueError):
    pass


class SchemaMismatch(PortraitError, ValueError):
    pass


class RegistryError(PortraitError, ValueError):
    pass


class IoError(PortraitError, OSError):
    """An output file could not be written."""
