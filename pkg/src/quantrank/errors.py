"""Exception types shared across the package."""


class QuantrankError(Exception):
    """Base class for all package errors."""


class InputError(QuantrankError, ValueError):
    """Malformed vectors, datasets, or configuration."""


class ParseError(InputError):
    """A dump or truth file failed to parse; carries path and line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class IndexOverflowError(QuantrankError):
    """Flattened cell index not representable in a native integer."""


class InsufficientDataError(QuantrankError):
    """Validation set too small to define a quantization search range."""


class EmptySurvivorError(QuantrankError):
    """No source survived the ground-truth accuracy threshold."""


class UndefinedCorrelationError(QuantrankError):
    """Correlation requested on a constant sequence."""
