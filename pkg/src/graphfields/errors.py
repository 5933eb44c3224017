"""Exception hierarchy shared across the package."""


class GraphFieldsError(Exception):
    """Base class for all package errors."""


class GraphFormatError(GraphFieldsError):
    """A graph or points document could not be parsed."""


class GraphValidationError(GraphFieldsError):
    """A graph violates the structural requirements (simple, connected, positive lengths)."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"invalid graph: {report}")


class PointError(GraphFieldsError):
    """A point reference is malformed or does not live on the graph."""


class FactorizationError(GraphFieldsError):
    """The vertex precision matrix could not be factorized."""


class ModelError(GraphFieldsError):
    """A covariance model is unknown, malformed, or used with the wrong operation."""


class QuadratureError(GraphFieldsError):
    """A covariance oracle integral did not reach the requested accuracy."""

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)


class SimulationError(GraphFieldsError):
    """A simulation run hit an unrecoverable numerical condition."""


class StatsError(GraphFieldsError):
    """A statistical routine was called outside its domain."""
