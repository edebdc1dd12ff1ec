"""Exception hierarchy.

Everything raised on purpose by the library derives from
:class:`PhaseSyncError`.  Errors caused by bad inputs or configuration also
derive from :class:`ValueError` so that ordinary ``except ValueError`` code
keeps working; the CLI maps these to exit status 2.
"""


class PhaseSyncError(Exception):
    """Base class for all library errors."""


class InputError(PhaseSyncError, ValueError):
    """Invalid user-supplied data or configuration."""


class InvalidInputError(InputError):
    """Non-finite or otherwise malformed numeric input."""


class InvalidBandError(InputError):
    """Band edges are not ordered or not strictly inside Nyquist."""


class InvalidOrderError(InputError):
    """Filter order below 1."""


class SeriesTooShortError(InputError):
    """Series shorter than the edge padding the filter needs."""


class LengthMismatchError(InputError):
    pass


class OutOfRangeError(InputError):
    pass


class WindowTooLongError(InputError):
    pass


class InfeasibleError(InputError):
    """More clusters requested than there are columns to cluster."""


class UndefinedMeanError(PhaseSyncError, ArithmeticError):
    """Circular mean of angles whose resultant vector vanishes."""


class DegenerateSeriesError(PhaseSyncError, ArithmeticError):
    """Zero-variance series where a variance is required."""


class TooFewCyclesError(PhaseSyncError, ArithmeticError):
    """Phase series with too few wrap events to build a CPP surrogate."""
