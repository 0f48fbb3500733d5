"""Exception types shared by every module.

The CLI maps ``ValidationError`` to exit code 2 and ``CapExceeded`` to
exit code 3.
"""


class ValidationError(ValueError):
    """Input data is structurally malformed or violates a stated invariant."""


class PreconditionError(ValidationError):
    """An operation was called outside its domain."""


class CapExceeded(RuntimeError):
    """A documented resource cap (enumeration size, iteration count) was hit."""


class InvariantError(AssertionError):
    """An internal consistency check failed; this signals a bug."""
