"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`GraphNLSError`; the CLI maps each subclass to a one-line diagnostic.
"""


class GraphNLSError(Exception):
    """Base class for all package errors."""


# graph construction / geometry
class DisconnectedGraph(GraphNLSError):
    pass


class NonPositiveLength(GraphNLSError):
    pass


class RayBetweenInfiniteVertices(GraphNLSError):
    pass


class PointNotOnGraph(GraphNLSError):
    pass


class EmptyRegion(GraphNLSError):
    pass


class UnboundedRegion(GraphNLSError):
    pass


class CompactGraphUnsupported(GraphNLSError):
    pass


class NotATree(GraphNLSError):
    pass


# meshing / fields
class UnsupportedOrder(GraphNLSError):
    pass


class TruncationTooCoarse(GraphNLSError):
    pass


class NonFiniteSample(GraphNLSError):
    pass


class MeshMismatch(GraphNLSError):
    pass


# operators / solvers
class OrderMismatch(GraphNLSError):
    pass


class NonFinitePotential(GraphNLSError):
    pass


class InvalidProblem(GraphNLSError):
    pass


class ImaginaryEnergy(GraphNLSError):
    pass


class ZeroField(GraphNLSError):
    pass


class NonNegativeSigma0(GraphNLSError):
    pass


class ExponentOutOfRange(GraphNLSError):
    pass


class SolverBreakdown(GraphNLSError):
    pass


class RegionExhaustsMesh(GraphNLSError):
    pass


class MaxIterations(GraphNLSError):
    pass


class DivergedEnergy(GraphNLSError):
    pass


# input parsing
class ParseError(GraphNLSError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(message + where)


class UnknownIdentifier(ParseError):
    pass


class SchemaError(GraphNLSError):
    pass
