"""Exception hierarchy shared by all modules."""


class EmbedLabError(Exception):
    """Base class; the CLI maps every subclass to exit code 1."""


class MetricError(EmbedLabError):
    pass


class AsymmetricMatrix(MetricError):
    pass


class NonzeroDiagonal(MetricError):
    pass


class NonpositiveOffDiagonal(MetricError):
    pass


class TriangleViolation(MetricError):
    def __init__(self, i, j, k, msg=None):
        self.triple = (i, j, k)
        super().__init__(msg or f"triangle inequality violated at ({i}, {j}, {k})")


class TooFewPoints(EmbedLabError):
    pass


class NonInjectiveImage(EmbedLabError):
    pass


class DisconnectedGraph(EmbedLabError):
    pass


class UnsupportedDimension(EmbedLabError):
    pass


class DegenerateParameters(EmbedLabError):
    pass


class UnnormalizedInput(EmbedLabError):
    pass


class NegativeLineValue(EmbedLabError):
    pass


class TooLarge(EmbedLabError):
    pass


class TooSmall(EmbedLabError):
    pass


class NotNested(EmbedLabError):
    pass


class CurvesIntersect(EmbedLabError):
    pass


class NotTotallyOrdered(EmbedLabError):
    pass


class DegenerateCurve(EmbedLabError):
    pass


class WrongSemantics(EmbedLabError):
    pass


class LociTooCrowded(EmbedLabError):
    pass


class InconsistentOrdering(EmbedLabError):
    pass


class ParameterRangeViolation(EmbedLabError):
    pass


class NoGapFound(EmbedLabError):
    pass


class IncompleteEmbedding(EmbedLabError):
    pass


class BadSize(EmbedLabError):
    pass


class DimensionExceedsAmbient(EmbedLabError):
    pass


class UnknownKind(EmbedLabError):
    pass
