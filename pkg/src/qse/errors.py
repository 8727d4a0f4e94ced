"""Exception types shared across the package."""


class QseError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QseError):
    """An input violates a documented precondition or invariant."""


class NumericalFailureError(QseError):
    """A computation cannot proceed because the inputs are numerically
    inconsistent (e.g. an outcome with zero likelihood everywhere, or a
    right-hand side that does not vanish on the kernel of the state)."""
