"""Exception types raised across the toolkit."""


class QracError(Exception):
    """Base class for toolkit errors."""


class InvalidDimensionError(QracError, ValueError):
    """A dimension, field order or code size outside the supported range."""


class InvalidInputError(QracError, ValueError):
    """Malformed operands: wrong shapes, non-Hermitian matrices, bad digits."""


class InvalidScaleError(QracError):
    """An encoding scale factor that would produce a non-PSD state."""


class SearchSpaceTooLargeError(QracError):
    """An exhaustive enumeration beyond the configured limit."""


class NotParityObliviousError(QracError):
    """A construction that needs parity-obliviousness received a code without it."""


class BoundViolationError(QracError, ValueError):
    """A success probability above the parity-oblivious ceiling (1 + 1/nu)/2."""
