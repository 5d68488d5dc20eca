"""Exception hierarchy shared by all kflat modules."""


class KFlatError(Exception):
    """Base class for every error raised by kflat."""


class SingularInput(KFlatError):
    pass


class NotHermitian(KFlatError):
    pass


class StepTooCoarse(KFlatError):
    pass


class NotClosed(KFlatError):
    pass


class UnknownGenerator(KFlatError):
    pass


class ShapeMismatch(KFlatError):
    pass


class GroupMismatch(KFlatError):
    pass


class BoundaryMismatch(KFlatError):
    """Mapping-cone element violates phi(a) = b_0."""


class GridTooCoarse(KFlatError):
    pass


class InvalidCover(KFlatError):
    pass


class DimMismatch(KFlatError):
    pass


class DefectTooLarge(KFlatError):
    pass


class PropagationExceeded(KFlatError):
    pass


class PolarBreakdown(KFlatError):
    pass


class SingularCompression(KFlatError):
    pass


class InexactCocycle(KFlatError):
    pass


class AveragingSingular(KFlatError):
    pass


class GapClosed(KFlatError):
    pass


class NotNormalized(KFlatError):
    pass


class TooFar(KFlatError):
    pass


class BudgetExceeded(KFlatError):
    pass


class TruncationTooCoarse(KFlatError):
    pass


class ConfigInvalid(KFlatError):
    pass


class BoundViolation(KFlatError, AssertionError):
    """A proven inequality failed numerically."""
