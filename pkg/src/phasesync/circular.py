"""Circular-statistics primitives shared by the synchronization metrics.

All functions accept scalars or arrays and work elementwise unless noted.
Two canonical angle ranges are used throughout the package:

* signed angles in ``[-pi, pi)`` (:func:`wrap_signed`)
* positive angles in ``[0, 2*pi)`` (:func:`wrap_positive`)
"""

import numpy as np

from .exceptions import InvalidInputError, OutOfRangeError, UndefinedMeanError

TWO_PI = 2.0 * np.pi

# mean resultant length below which the mean direction is undefined
MIN_RESULTANT = 1e-12

_BELOW_PI = np.nextafter(np.pi, 0.0)


def _as_finite(theta):
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("angles must be finite")
    return arr


def _unbox(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def wrap_signed(theta):
    """Wrap angles (radians) to the half-open interval ``[-pi, pi)``.

    Examples
    --------
    >>> wrap_signed(5 * np.pi / 2)
    1.5707963267948966
    >>> wrap_signed(np.pi)
    -3.141592653589793
    """
    arr = _as_finite(theta)
    out = arr - TWO_PI * np.floor((arr + np.pi) / TWO_PI)
    # floating point can land exactly on the excluded endpoint
    out = np.where(out >= np.pi, out - TWO_PI, out)
    out = np.where(out < -np.pi, out + TWO_PI, out)
    return _unbox(out, theta)


def wrap_positive(theta):
    """Wrap angles (radians) to ``[0, 2*pi)``."""
    arr = _as_finite(theta)
    out = np.mod(arr, TWO_PI)
    # np.mod(-1e-20, 2pi) rounds to 2pi
    out = np.where(out >= TWO_PI, 0.0, out)
    return _unbox(out, theta)


def resultant_length(angles, axis=-1):
    """Mean resultant length of ``angles`` along ``axis`` (in ``[0, 1]``)."""
    angles = np.asarray(angles, dtype=float)
    return np.abs(np.exp(1j * angles).mean(axis=axis))


def circular_mean(angles):
    """Mean direction of a set of angles, in ``[-pi, pi)``.

    Uses the four-quadrant arctangent of the summed sines and cosines, i.e.
    the direction of the resultant vector.

    Raises
    ------
    UndefinedMeanError
        If the mean resultant length is at most ``1e-12`` (e.g. two
        antipodal angles).
    """
    angles = _as_finite(angles).ravel()
    if angles.size == 0:
        raise InvalidInputError("circular_mean needs at least one angle")
    s = np.sin(angles).sum()
    c = np.cos(angles).sum()
    if np.hypot(s, c) / angles.size <= MIN_RESULTANT:
        raise UndefinedMeanError("resultant vector vanishes; mean direction undefined")
    return wrap_signed(np.arctan2(s, c))


def circular_mean_along(angles, axis=-1):
    """Vectorised :func:`circular_mean` that returns NaN where undefined."""
    angles = np.asarray(angles, dtype=float)
    s = np.sin(angles).sum(axis=axis)
    c = np.cos(angles).sum(axis=axis)
    n = angles.shape[axis]
    mean = np.arctan2(s, c)
    mean = np.where(mean >= np.pi, mean - TWO_PI, mean)
    return np.where(np.hypot(s, c) / n > MIN_RESULTANT, mean, np.nan)


def order_function(delta):
    """Toroidal order function of a within-series angle difference.

    ``h(delta) = ((delta + 2*pi) mod 2*pi) - pi``, evaluated piecewise as
    ``delta + pi`` for negative ``delta`` and ``delta - pi`` otherwise so that
    ``h(-d) == -h(d)`` holds bit-exactly for ``d`` in ``(0, 2*pi)``.

    ``delta`` must satisfy ``|delta| < 2*pi``; the result lies in
    ``[-pi, pi)``.  Note ``h(0) = -pi``.  For negative ``delta`` closer to
    zero than half an ulp of pi the sum rounds to pi; it is pulled back to
    the largest float below pi to keep the range half-open.
    """
    arr = _as_finite(delta)
    if np.any(np.abs(arr) >= TWO_PI):
        raise OutOfRangeError("order_function argument must satisfy |delta| < 2*pi")
    out = np.where(arr < 0, arr + np.pi, arr - np.pi)
    out = np.minimum(out, _BELOW_PI)
    return _unbox(out, delta)
