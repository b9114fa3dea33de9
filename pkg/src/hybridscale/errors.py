"""Exception hierarchy shared by all modules."""


class HybridScaleError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HybridScaleError, ValueError):
    """Invalid configuration or parameter combination."""


class ParseError(HybridScaleError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(HybridScaleError, ValueError):
    """Trace rows are not strictly increasing in time."""


class RangeError(HybridScaleError, IndexError):
    pass


class InsufficientDataError(HybridScaleError, ValueError):
    """Not enough history for a model or evaluation."""

    def __init__(self, message: str, minimum: int | None = None):
        self.minimum = minimum
        super().__init__(message)


class DomainError(HybridScaleError, ValueError):
    pass


class UnknownInstanceError(HybridScaleError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown instance type"


class OracleScopeError(HybridScaleError, ValueError):
    """The brute-force oracle's search space exceeds its bound."""
