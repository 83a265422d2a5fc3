"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2,
SizeCapError / StalledError -> 3.
"""


class BellboxError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BellboxError, ValueError):
    """Malformed input: bad ranges, broken normalization, inconsistent shapes."""


class SizeCapError(BellboxError):
    """A configured size cap (strategy count, LP dimensions, facet scale) was exceeded."""


class StalledError(BellboxError):
    """An iterative solve hit its iteration limit before reaching a certified status."""
