"""Exception hierarchy shared by all modules."""


class PefemError(Exception):
    """Base class for all errors raised by this package."""


class NoConvergence(PefemError):
    """An iterative procedure did not reach its tolerance."""


class ProjectionFailure(PefemError):
    """The closest-point map could not be evaluated reliably."""


class ProjectionNotConverged(ProjectionFailure, NoConvergence):
    pass


class AmbiguousProjection(ProjectionFailure):
    """Two distinct boundary points are (numerically) equally close."""


class QualityFailure(PefemError):
    """A mesh triangle violates the minimum angle threshold."""


class SingularElement(PefemError):
    """Degenerate triangle: the affine map is (nearly) singular."""


class UnsupportedDegree(PefemError):
    pass


class InsufficientResolution(PefemError):
    """Too few discrepancies above round-off to fit a rate."""


class SingularSystem(PefemError):
    pass


class DegenerateErrors(PefemError):
    """Errors at round-off level; convergence rates are meaningless."""


class MissingExact(PefemError):
    pass
