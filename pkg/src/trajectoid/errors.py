"""Exception and warning types shared across the package."""


class TrajectoidError(Exception):
    """Base class for all errors raised by this package."""


# path ingestion
class DegeneratePath(TrajectoidError):
    pass


class ZeroDisplacement(TrajectoidError):
    pass


class TangentMismatch(TrajectoidError):
    pass


class NonMonotoneSamples(TrajectoidError):
    pass


class RoughCurvatureWarning(UserWarning):
    """Curvature jumps between neighbouring samples exceed the smoothness threshold."""


# sphere tracing
class StepTooCoarse(TrajectoidError):
    pass


# spherical geometry
class NotConstructible(TrajectoidError):
    """No isosceles apex exists for the requested base and apex angle."""


class AntipodalEndpoints(TrajectoidError):
    pass


class FanPointDegenerate(TrajectoidError):
    pass


# solver
class XOutOfRange(TrajectoidError):
    def __init__(self, message, N=None):
        super().__init__(message)
        self.N = N


class BracketFailure(TrajectoidError):
    def __init__(self, message, note=None, diagnostics=None):
        super().__init__(message)
        self.note = note
        self.diagnostics = diagnostics or {}


class NonSmoothPath(TrajectoidError):
    pass


# meshing
class JunctionGap(TrajectoidError):
    pass


class TangentKink(UserWarning):
    """Copies of the spherical curve meet with a tangent discontinuity."""


class DegenerateHull(TrajectoidError):
    pass
