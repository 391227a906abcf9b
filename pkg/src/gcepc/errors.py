"""Exception hierarchy shared by all modules."""


class GcepcError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(GcepcError, ValueError):
    pass


class PartitionError(ParameterError):
    pass


class InfeasibleError(ParameterError):
    """Too few worker groups for the requested code parameters."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ShapeError(GcepcError, ValueError):
    pass


class MatrixMarketError(GcepcError, ValueError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ConstructionError(GcepcError):
    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset


class SpanViolationError(GcepcError):
    pass


class InsufficientResultsError(GcepcError):
    """Not enough worker results (in a group, or across groups) to decode."""


class ConfigurationError(GcepcError):
    """E.g. duplicate evaluation points making the interpolation singular."""


class UndefinedMetricError(GcepcError, ZeroDivisionError):
    pass


class InfeasibleRunError(GcepcError):
    pass


class OracleSizeError(GcepcError):
    pass
