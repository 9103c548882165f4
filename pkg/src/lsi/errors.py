"""Exception types raised across the package."""


class LsiError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDatasetError(LsiError, ValueError):
    """Raised when an index or dataset would be built from zero keys."""

    def __init__(self, msg="empty dataset"):
        super().__init__(msg)


class ConfigError(LsiError, ValueError):
    """Raised for unsupported parameters (error bounds, widths, families...)."""


class UnsortedInputError(LsiError, ValueError):
    """Raised when an input that must be sorted ascending is not."""


class TruncatedFileError(LsiError, IOError):
    """Raised when a SOSD file's length disagrees with its count header."""


class ValidationError(LsiError, RuntimeError):
    """Raised by the benchmark when a lookup disagrees with the oracle."""
