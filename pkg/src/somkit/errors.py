"""Exception types raised across somkit.

Every error that the CLI maps to "data/format" (exit 2) derives from
:class:`SomError`; :class:`InvariantViolation` is reserved for checks that
should never fire on valid input (exit 3).
"""


class SomError(Exception):
    """Base class for user-facing data, configuration and format errors."""


class DimensionError(SomError, ValueError):
    """Two vectors, or a vector and a map, disagree on dimension."""

    def __init__(self, expected, actual, what="dimension"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: expected {expected}, got {actual}")


class ConfigError(SomError, ValueError):
    """Invalid training or map configuration."""


class DataFormatError(SomError, ValueError):
    """Malformed CSV input or an unusable dataset."""


class SchemaError(SomError, ValueError):
    """A model, assignments or report document violates its schema."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (a bug, not bad input)."""
