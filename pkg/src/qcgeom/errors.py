"""Exception hierarchy.

Two families matter to callers: ``InputError`` (malformed files, bad
arguments) and ``GeometricRejection`` (the surface or the numerics do not
support the requested geometric conclusion).  The CLI maps them to exit
codes 1 and 2.
"""


class QCGeomError(Exception):
    pass


class InputError(QCGeomError):
    pass


class DimensionMismatch(InputError, ValueError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        self.bare_message = message
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


class UnknownIdentifier(ParseError):
    pass


class SlotIndexOutOfRange(ParseError):
    pass


class GeometricRejection(QCGeomError):
    """Base for every failure that says something about the surface."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DivisionByZero(GeometricRejection):
    pass


class NoConvergence(GeometricRejection):
    pass


class SamplingExhausted(GeometricRejection):
    pass


class NotOnSurface(GeometricRejection):
    pass


class VanishingGradient(GeometricRejection):
    pass


class NotTangent(GeometricRejection):
    pass


class NotQCHypersurface(GeometricRejection):
    pass


class LinearSolveFailure(GeometricRejection):
    pass


class NotSameHorizontal(GeometricRejection):
    pass


class NotConformallyRelated(GeometricRejection):
    pass


class NonPositiveMu(GeometricRejection):
    pass


class PfaffianSingular(GeometricRejection):
    pass


class InconsistentCalibration(GeometricRejection):
    pass


class ProjectionNotTangent(GeometricRejection):
    pass


class NotParallel(GeometricRejection):
    pass


class NotJInvariant(GeometricRejection):
    pass


class QuadrupleViolation(GeometricRejection):
    pass


class RankDeficientFit(GeometricRejection):
    pass


class InconsistentClassification(GeometricRejection):
    pass


class DegenerateLinearPart(GeometricRejection):
    pass


class NotDegenerate(GeometricRejection):
    pass
