"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`MGSGError`
so callers (and the CLI) can catch library failures without swallowing
programming errors.
"""


class MGSGError(Exception):
    """Base class for all library errors."""


# graph construction
class GraphError(MGSGError, ValueError):
    pass


class DisconnectedGraph(GraphError):
    pass


class ZeroDegreeVertex(GraphError):
    pass


class NonpositiveLength(GraphError):
    pass


class DanglingVertexReference(GraphError):
    pass


class EmptyGraph(GraphError):
    pass


class MissingEndpointDatum(GraphError):
    pass


class TadpolePresent(GraphError):
    pass


# boundary conditions
class ConditionError(MGSGError, ValueError):
    pass


class DimensionMismatch(ConditionError):
    pass


class RankDeficient(ConditionError):
    pass


class InvalidParams(ConditionError):
    pass


class MissingVertex(ConditionError):
    pass


class DegreeTooSmall(ConditionError):
    pass


class NotLocalInput(ConditionError):
    pass


class NotContinuousInput(ConditionError):
    pass


# spectral / analytic evaluation
class EvaluationError(MGSGError, ArithmeticError):
    pass


class SingularAtK(EvaluationError):
    pass


class PoleAtK(EvaluationError):
    pass


class NotInResolventSet(EvaluationError):
    pass


class NonpositiveKernel(EvaluationError):
    pass


class EmptyRange(MGSGError, ValueError):
    pass


class SeriesDiverges(EvaluationError):
    pass


class CutoffTooLarge(MGSGError, ValueError):
    pass


class MissingVertexMatrix(MGSGError, KeyError):
    pass


# evolution
class NotAGenerator(MGSGError, ValueError):
    pass


class ContourFailure(EvaluationError):
    pass


class LinearSolveFailure(EvaluationError):
    pass


# input files
class SpecError(MGSGError, ValueError):
    pass


class ParseError(SpecError):
    pass


class SchemaError(SpecError):
    pass


class UnknownCommand(MGSGError, ValueError):
    pass
