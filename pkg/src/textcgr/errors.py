"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class TextcgrError(Exception):
    """Base class for all package errors."""


class ConfigError(TextcgrError):
    """Invalid settings: bad flag values, inconsistent parameters."""


class DataError(TextcgrError):
    """Unusable input data: short sequences, missing labels, bad files."""


class NumericalError(TextcgrError):
    """A numerical routine failed to converge or produced non-finite values."""
