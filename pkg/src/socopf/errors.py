"""Exception types shared across the package."""


class SocopfError(Exception):
    """Base class for all package errors."""


class ParseError(SocopfError):
    """Base class for case-file parsing errors."""


class MissingMatrix(ParseError):
    """A required mpc.<name> matrix is absent from the case file."""


class MalformedRow(ParseError):
    """A matrix row has a non-numeric token or the wrong number of columns."""


class UnsupportedCostModel(ParseError):
    """Piecewise-linear generator cost data cannot be used."""


class NetworkError(SocopfError):
    """Base class for network construction errors."""


class DisconnectedGraph(NetworkError):
    """The branch graph does not connect all buses."""


class NonpositiveReactance(NetworkError):
    """A branch has X <= 0, which the loss model cannot represent."""


class EmptyNetwork(NetworkError):
    """No in-service buses or branches remain."""


class FormulationError(SocopfError):
    """Base class for model assembly errors."""


class AsymmetricAngleBounds(FormulationError):
    """The recovery cone needs symmetric branch angle bounds."""


class DimensionMismatch(SocopfError):
    """A point or solution vector does not match the expected dimensions."""


class SolverError(SocopfError):
    """Base class for conic solver failures."""


class NumericalLimit(SolverError):
    """KKT factorization broke down after regularization escalation."""


class IterationLimit(SolverError):
    """The interior-point loop hit its iteration cap before converging."""


class ConditionViolated(SocopfError):
    """The SOC solution cannot be mapped back to an AC point (arcsin out of range)."""


class TightenInfeasible(SocopfError):
    """No load increase can support the fixed generation dispatch."""


class NoFeasiblePoint(SocopfError):
    """Brute-force search found no point within the feasibility tolerance."""
