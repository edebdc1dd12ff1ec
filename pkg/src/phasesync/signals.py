"""Band-pass filtering and analytic-signal phase extraction.

The pipeline for one region is::

    raw series --filtfilt(Butterworth band-pass)--> narrow-band series
               --analytic_signal--> envelope, instantaneous phase

Narrow-banding first matters: the envelope/phase split of the analytic signal
is only meaningful when the input is (close to) monocomponent.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .circular import wrap_signed
from .exceptions import (
    InvalidBandError,
    InvalidInputError,
    InvalidOrderError,
    SeriesTooShortError,
)

MIN_SAMPLES = 16


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RoiDataset:
    """Real-valued recordings, one row per region.

    Parameters
    ----------
    values : array, shape (R, T)
    tr_seconds : float
        Sampling interval in seconds.
    region_labels : list of str, optional
        Defaults to ``r0, r1, ...``.
    """

    values: np.ndarray
    tr_seconds: float
    region_labels: list = field(default=None)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim == 1:
            values = _frozen(values[None, :])
        if values.ndim != 2:
            raise InvalidInputError("RoiDataset values must be a 2-D (regions x samples) array")
        n_regions, n_samples = values.shape
        if n_regions < 1:
            raise InvalidInputError("RoiDataset needs at least one region")
        if n_samples < MIN_SAMPLES:
            raise InvalidInputError(f"RoiDataset needs at least {MIN_SAMPLES} samples, got {n_samples}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("RoiDataset values must be finite")
        if not (np.isfinite(self.tr_seconds) and self.tr_seconds > 0):
            raise InvalidInputError("tr_seconds must be positive")
        labels = self.region_labels
        if labels is None:
            labels = [f"r{i}" for i in range(n_regions)]
        labels = [str(lab) for lab in labels]
        if len(labels) != n_regions:
            raise InvalidInputError(
                f"got {len(labels)} region labels for {n_regions} regions")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tr_seconds", float(self.tr_seconds))
        object.__setattr__(self, "region_labels", labels)

    @property
    def n_regions(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class BandSpec:
    """Butterworth band-pass design: edges in Hz and analog prototype order."""

    low_hz: float
    high_hz: float
    order: int = 5

    def validate(self, tr_seconds):
        """Raise if the band is not strictly inside ``(0, nyquist)``."""
        if int(self.order) != self.order or self.order < 1:
            raise InvalidOrderError(f"filter order must be a positive integer, got {self.order}")
        nyquist = 0.5 / tr_seconds
        if not (0 < self.low_hz < self.high_hz):
            raise InvalidBandError(
                f"band edges must satisfy 0 < low < high, got [{self.low_hz}, {self.high_hz}] Hz")
        if self.high_hz >= nyquist:
            raise InvalidBandError(
                f"band edge {self.high_hz} Hz is at or beyond the Nyquist frequency "
                f"{nyquist:g} Hz (TR = {tr_seconds:g} s)")
        return self


DEFAULT_BAND = BandSpec(0.03, 0.07, 5)


@dataclass(frozen=True)
class AnalyticSignal:
    envelope: np.ndarray
    phase: np.ndarray

    @property
    def complex(self):
        return self.envelope * np.exp(1j * self.phase)


@dataclass(frozen=True)
class PhaseMatrix:
    """Instantaneous phases, shape (R, T), wrapped to ``[-pi, pi)``."""

    phases: np.ndarray
    tr_seconds: float
    region_labels: list = field(default=None)

    def __post_init__(self):
        phases = _frozen(self.phases)
        if phases.ndim != 2:
            raise InvalidInputError("PhaseMatrix phases must be 2-D")
        if np.any(phases < -np.pi) or np.any(phases >= np.pi):
            raise InvalidInputError("phases must lie in [-pi, pi)")
        object.__setattr__(self, "phases", phases)
        if self.region_labels is None:
            object.__setattr__(self, "region_labels", [f"r{i}" for i in range(phases.shape[0])])

    @property
    def n_regions(self):
        return self.phases.shape[0]

    @property
    def n_samples(self):
        return self.phases.shape[1]


def design_butterworth_bandpass(spec, tr_seconds):
    """Digital Butterworth band-pass coefficients ``(b, a)``.

    The analog prototype of order ``spec.order`` is mapped with the bilinear
    transform (edges pre-warped), giving a digital filter of order
    ``2 * spec.order``, so both coefficient arrays have length
    ``2 * spec.order + 1``.
    """
    spec.validate(tr_seconds)
    b, a = sps.butter(int(spec.order), [spec.low_hz, spec.high_hz],
                      btype="bandpass", fs=1.0 / tr_seconds)
    return b, a


def frequency_response(coeffs, freqs_hz, tr_seconds):
    """Complex response ``H(exp(j*w))`` by direct polynomial evaluation."""
    b, a = coeffs
    z = np.exp(2j * np.pi * np.asarray(freqs_hz, dtype=float) * tr_seconds)
    return np.polyval(b[::-1], 1 / z) / np.polyval(a[::-1], 1 / z)


def filtfilt(coeffs, series):
    """Zero-phase forward-backward filtering.

    The series is extended at both ends by odd reflection over
    ``3 * (len(a) - 1)`` samples and the filter state is initialised to its
    step-response steady state scaled by the first padded sample, which keeps
    start-up transients out of the output.

    Raises
    ------
    SeriesTooShortError
        If the series is not longer than ``3 * (len(a) - 1 + 1)`` samples.
    """
    b, a = coeffs
    x = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("series must be finite")
    order = len(a) - 1
    if x.shape[-1] <= 3 * (order + 1):
        raise SeriesTooShortError(
            f"series of length {x.shape[-1]} too short for a filter of order {order} "
            f"(needs more than {3 * (order + 1)} samples)")
    return sps.filtfilt(b, a, x, axis=-1, padtype="odd", padlen=3 * order)


def analytic_signal(series):
    """FFT analytic signal of a real series (last axis).

    Bin 0 (and bin ``T/2`` for even ``T``) keep unit weight, positive
    frequency bins are doubled and negative ones zeroed before the inverse
    FFT.  Returns an :class:`AnalyticSignal` with the modulus as envelope and
    the wrapped four-quadrant angle as phase.
    """
    x = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("series must be finite")
    n = x.shape[-1]
    if n < MIN_SAMPLES:
        raise InvalidInputError(f"analytic_signal needs at least {MIN_SAMPLES} samples")
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[n // 2] = 1.0
        weights[1:n // 2] = 2.0
    else:
        weights[1:(n + 1) // 2] = 2.0
    z = np.fft.ifft(np.fft.fft(x, axis=-1) * weights, axis=-1)
    return AnalyticSignal(envelope=np.abs(z), phase=wrap_signed(np.angle(z)))


def bandpass(data, spec=DEFAULT_BAND):
    """Band-pass every region of ``data`` (a :class:`RoiDataset`)."""
    coeffs = design_butterworth_bandpass(spec, data.tr_seconds)
    return filtfilt(coeffs, data.values)


def extract_phases(data, spec=DEFAULT_BAND, filtering=True):
    """Instantaneous phase of every region: band-pass, then analytic signal.

    With ``filtering=False`` the analytic signal is taken of the raw series,
    which is only useful to demonstrate why narrow-banding is needed.
    """
    narrow = bandpass(data, spec) if filtering else np.asarray(data.values)
    phases = analytic_signal(narrow).phase
    return PhaseMatrix(phases=phases, tr_seconds=data.tr_seconds,
                       region_labels=list(data.region_labels))
