"""Exception types shared across the package."""


class RicfError(Exception):
    """Base class for all errors raised by this package."""


class InvalidVertexError(RicfError):
    """A vertex index is not part of the graph."""


class CyclicGraphError(RicfError):
    """A directed cycle was found where an acyclic graph is required."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        path = " -> ".join(str(v) for v in self.cycle)
        super().__init__(f"directed cycle: {path}")


class ModelClassError(RicfError):
    """The graph is outside the supported model class (not a BAP)."""


class ModelMismatchError(RicfError):
    """Parameter objects built on different graphs were combined."""


class NotPositiveDefiniteError(RicfError):
    """A matrix required to be positive definite is not."""


class RankDeficiencyError(RicfError):
    """A least-squares regressor block is rank deficient.

    ``columns`` names the offending covariates.
    """

    def __init__(self, message, columns=()):
        self.columns = list(columns)
        super().__init__(message)


class ShapeError(RicfError):
    """Array dimensions do not match the graph or each other."""


class GraphParseError(RicfError):
    """A graph file could not be parsed; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDataError(RicfError):
    """A data matrix with zero observations was supplied."""


class ConfigError(RicfError):
    """Invalid configuration values."""
