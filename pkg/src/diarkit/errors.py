"""Exception types shared across the package."""


class DiarkitError(Exception):
    """Base class for every error this package raises on purpose."""


class ParseError(DiarkitError):
    """A text input could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(DiarkitError):
    """A file or in-memory value violates its declared format."""


class ShapeError(DiarkitError):
    """Array dimensions do not match what the operation requires."""


class DegenerateInputError(DiarkitError):
    """Input is well-formed but carries no usable information."""


class ConfigurationError(DiarkitError):
    """A configuration value or combination of values is invalid."""


class FitError(DiarkitError):
    """Model fitting cannot proceed on the given data."""


class UsageError(DiarkitError):
    """Operation invoked on mismatched or inconsistent arguments."""


class ComputationError(DiarkitError):
    """A numerical routine produced or received non-finite values."""
