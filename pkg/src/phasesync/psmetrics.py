"""Phase-synchronization metrics and the sliding-window engine.

Windowed (WPS) kernels -- :func:`plv_window`, :func:`circ_circ_window`,
:func:`toroidal_window`, :func:`csw_window` -- reduce the last axis of their
inputs, so they can be called on a single window of shape ``(L,)`` or on a
stack of windows of shape ``(n, L)``.  Degenerate windows give ``NaN``,
which is the package-wide marker for a missing value.

Instantaneous (IPS) metrics -- :func:`phase_coherence`, :func:`crp` -- map
each phase difference to a value.

Windows are trailing: the value reported at sample ``t`` is computed from
samples ``t-L+1 .. t``.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .circular import circular_mean_along, order_function, wrap_positive, wrap_signed
from .exceptions import (
    DegenerateSeriesError,
    InputError,
    LengthMismatchError,
    WindowTooLongError,
)

EPS = 1e-12


class Metric(str, enum.Enum):
    PLV = "plv"
    CIRC_CIRC = "circ_circ"
    TOROIDAL = "toroidal"
    COHERENCE = "coherence"
    CRP = "crp"
    CSW = "csw"
    PW_CSW = "pw_csw"

    @property
    def code(self):
        """Stable integer id used by the binary tensor container."""
        return list(Metric).index(self)

    @classmethod
    def from_code(cls, code):
        return list(cls)[code]

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(name).strip().lower().replace("-", "_"))
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InputError(f"unknown metric {name!r} (choose from {choices})") from None

    @property
    def windowed(self):
        return self not in (Metric.COHERENCE, Metric.CRP)

    @property
    def uses_phase(self):
        return self not in (Metric.CSW, Metric.PW_CSW)

    @property
    def bounds(self):
        if self in (Metric.PLV, Metric.COHERENCE):
            return (0.0, 1.0)
        return (-1.0, 1.0)


WPS_METRICS = (Metric.PLV, Metric.CIRC_CIRC, Metric.TOROIDAL)
IPS_METRICS = (Metric.COHERENCE, Metric.CRP)
PS_METRICS = WPS_METRICS + IPS_METRICS
ALL_METRICS = tuple(Metric)


@dataclass(frozen=True)
class WindowSpec:
    """Trailing window of ``length_samples`` samples."""

    length_samples: int

    def __post_init__(self):
        if int(self.length_samples) != self.length_samples or self.length_samples < 2:
            raise InputError(f"window length must be an integer >= 2, got {self.length_samples}")
        object.__setattr__(self, "length_samples", int(self.length_samples))


@dataclass(frozen=True)
class PsSeries:
    """Time course of one metric for one pair.

    ``values[k]`` belongs to sample ``offset + k``; missing entries are NaN.
    """

    values: np.ndarray
    metric: Metric
    window: WindowSpec = None
    offset: int = 0

    @property
    def valid(self):
        return ~np.isnan(self.values)


@dataclass(frozen=True)
class PsTensor:
    """Pairwise metric time courses for one subject.

    ``values`` has shape ``(P, T')`` with one row per region pair.  Pairs are
    ordered by :func:`pair_index`: ``(0, 1), (0, 2), (1, 2), (0, 3), ...``,
    i.e. row-major over the lower triangle (row ``j``, column ``i``).
    Column ``k`` belongs to sample ``offset + k``.
    """

    values: np.ndarray
    n_regions: int
    metric: Metric
    window: int = None
    offset: int = 0
    tr_seconds: float = 1.0
    region_labels: list = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n_pairs = self.n_regions * (self.n_regions - 1) // 2
        if values.ndim != 2 or values.shape[0] != n_pairs:
            raise InputError(
                f"tensor for {self.n_regions} regions needs {n_pairs} rows, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "metric", Metric(self.metric))
        if self.region_labels is None:
            object.__setattr__(self, "region_labels", [f"r{i}" for i in range(self.n_regions)])

    @property
    def pair_index(self):
        return pair_index(self.n_regions)

    @property
    def valid(self):
        return ~np.isnan(self.values)

    @property
    def times_s(self):
        return (self.offset + np.arange(self.values.shape[1])) * self.tr_seconds


def pair_index(n_regions):
    """Region pairs ``(i, j)``, ``i < j``, with ``j`` outer and ``i`` inner."""
    return [(i, j) for j in range(1, n_regions) for i in range(j)]


# --- instantaneous metrics --------------------------------------------------

def phase_difference(phi_x, phi_y):
    """Wrapped phase difference ``phi_x - phi_y`` in ``[-pi, pi)``."""
    phi_x = np.asarray(phi_x, dtype=float)
    phi_y = np.asarray(phi_y, dtype=float)
    if phi_x.shape != phi_y.shape:
        raise LengthMismatchError(f"phase series shapes differ: {phi_x.shape} vs {phi_y.shape}")
    return wrap_signed(phi_x - phi_y)


def phase_coherence(delta_phi):
    """``1 - |sin(delta_phi)|``; blind to the sign of the association.

    Evaluated as ``cos^2 / (1 + |sin|)``, which avoids cancellation and makes
    the value 0 exactly where :func:`crp` is 0.  Where the cosine rounds to
    +/-1 the value is set to 1 (a change below 1.1e-8), so that the value is
    1 exactly where :func:`crp` is +/-1.
    """
    d = np.asarray(delta_phi, dtype=float)
    c = np.cos(d)
    out = np.where(np.abs(c) == 1.0, 1.0, c * c / (1.0 + np.abs(np.sin(d))))
    return float(out) if np.ndim(delta_phi) == 0 else out


def crp(delta_phi):
    """Cosine of the relative phase, ``cos(delta_phi)``, in ``[-1, 1]``."""
    return np.cos(delta_phi)


# --- window kernels ---------------------------------------------------------

def plv_window(delta_phi):
    """Phase locking value: modulus of the mean unit phasor of the window."""
    delta_phi = np.asarray(delta_phi, dtype=float)
    return np.minimum(np.abs(np.exp(1j * delta_phi).mean(axis=-1)), 1.0)


def circ_circ_window(phi_x, phi_y):
    """Circular-circular correlation of two windows of angles.

    Correlates the sines of the deviations of each series from its own
    circular mean direction.  NaN when either mean direction is undefined or
    either sum of squared sine deviations is below ``1e-12``.
    """
    phi_x = np.asarray(phi_x, dtype=float)
    phi_y = np.asarray(phi_y, dtype=float)
    mu = circular_mean_along(phi_x)[..., None]
    nu = circular_mean_along(phi_y)[..., None]
    sx = np.sin(phi_x - mu)
    sy = np.sin(phi_y - nu)
    num = (sx * sy).sum(axis=-1)
    vx = (sx * sx).sum(axis=-1)
    vy = (sy * sy).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(vx * vy)
    return np.where((vx < EPS) | (vy < EPS), np.nan, np.clip(r, -1.0, 1.0))


_TRIU_CACHE = {}


def _strict_pairs(n):
    if n not in _TRIU_CACHE:
        _TRIU_CACHE[n] = np.triu_indices(n, k=1)
    return _TRIU_CACHE[n]


def toroidal_window(phi_x, phi_y):
    """Toroidal circular correlation of two windows of angles.

    Angles are mapped to ``[0, 2*pi)`` and the order function is applied to
    the differences of every strictly ordered pair of samples ``i < j``.
    Diagonal pairs are left out: they would all contribute ``h(0)**2 = pi**2``
    to both numerator and denominators and bias the estimate upwards.
    """
    phi_x = wrap_positive(np.asarray(phi_x, dtype=float))
    phi_y = wrap_positive(np.asarray(phi_y, dtype=float))
    i, j = _strict_pairs(phi_x.shape[-1])
    hx = order_function(phi_x[..., i] - phi_x[..., j])
    hy = order_function(phi_y[..., i] - phi_y[..., j])
    num = (hx * hy).sum(axis=-1)
    vx = (hx * hx).sum(axis=-1)
    vy = (hy * hy).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(vx * vy)
    return np.where((vx < EPS) | (vy < EPS), np.nan, np.clip(r, -1.0, 1.0))


def _toroidal_sliding(phi_x, phi_y, length):
    """Toroidal correlation over every trailing window, sharing pair terms.

    Pair ``(i, j)`` with ``0 < j - i < length`` enters every window that
    contains both samples, so each product is formed once on a band of
    width ``length`` and window sums are read off row-wise cumulative sums.
    Agrees with :func:`toroidal_window` on each slice up to rounding.
    """
    n = phi_x.shape[-1]
    pad = np.full(length - 1, np.nan)
    terms = []
    for phi in (phi_x, phi_y):
        band = sliding_window_view(np.concatenate([wrap_positive(phi), pad]), length)
        delta = band[:, :1] - band[:, 1:]
        h = np.where(delta < 0, delta + np.pi, delta - np.pi)
        terms.append(np.minimum(h, np.nextafter(np.pi, 0.0)))
    hx, hy = terms
    sums = []
    for prod in (hx * hy, hx * hx, hy * hy):
        csum = np.zeros((n, length))
        csum[:, 1:] = np.cumsum(np.nan_to_num(prod), axis=1)
        t = np.arange(length - 1, n)[:, None]
        k = np.arange(length)[None, :]
        sums.append(csum[t - length + 1 + k, length - 1 - k].sum(axis=1))
    num, vx, vy = sums
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(vx * vy)
    return np.where((vx < EPS) | (vy < EPS), np.nan, np.clip(r, -1.0, 1.0))


def csw_window(x, y):
    """Pearson correlation over a window; NaN for zero-variance windows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean(axis=-1, keepdims=True)
    dy = y - y.mean(axis=-1, keepdims=True)
    vx = (dx * dx).sum(axis=-1)
    vy = (dy * dy).sum(axis=-1)
    num = (dx * dy).sum(axis=-1)
    # relative threshold: a constant window leaves rounding residue ~ (ulp*x)^2
    tiny_x = 1e-20 * (x * x).sum(axis=-1) + np.finfo(float).tiny
    tiny_y = 1e-20 * (y * y).sum(axis=-1) + np.finfo(float).tiny
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(vx * vy)
    return np.where((vx <= tiny_x) | (vy <= tiny_y), np.nan, np.clip(r, -1.0, 1.0))


def lag1_autocorrelation(x):
    """Lag-1 sample autocorrelation (mean removed, normalised by ``T``)."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    denom = np.dot(d, d)
    if denom <= 1e-20 * np.dot(x, x) + np.finfo(float).tiny:
        raise DegenerateSeriesError("series has zero variance")
    return float(np.dot(d[1:], d[:-1]) / denom)


def prewhiten_ar1(x):
    """Residuals of an AR(1) fit: ``x[t] - rho * x[t-1]`` for ``t = 1..T-1``.

    ``rho`` is the lag-1 sample autocorrelation.  The output is one sample
    shorter than the input and sample ``k`` of the output belongs to sample
    ``k + 1`` of the input.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 8:
        raise InputError("prewhiten_ar1 needs at least 8 samples")
    rho = lag1_autocorrelation(x)
    return x[1:] - rho * x[:-1]


# --- engine -----------------------------------------------------------------

_WINDOW_KERNELS = {
    Metric.PLV: "plv_window",
    Metric.CIRC_CIRC: "circ_circ_window",
    Metric.TOROIDAL: "toroidal_window",
    Metric.CSW: "csw_window",
    Metric.PW_CSW: "csw_window",
}

_MIN_WINDOW = {Metric.PLV: 2}

_KERNEL_DEFAULTS = {}


def window_kernel(metric):
    # looked up at call time so that the oracle harness can patch kernels
    return globals()[_WINDOW_KERNELS[Metric(metric)]]


def _windows(a, length):
    return sliding_window_view(a, length, axis=-1)


def sliding_apply(metric, x, y, window):
    """Evaluate a metric over every full trailing window of ``x`` and ``y``.

    ``x``, ``y`` are phases for the phase metrics and real signals for
    ``CSW``; ``PW_CSW`` prewhitens both inputs first.  Instantaneous metrics
    ignore ``window``.

    Returns
    -------
    PsSeries
        For windowed metrics ``T - L + 1`` values with ``offset = L - 1``
        (``PW_CSW``: ``T - L`` values with ``offset = L``).
    """
    metric = Metric(metric)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatchError(f"series shapes differ: {x.shape} vs {y.shape}")
    if not metric.windowed:
        fn = phase_coherence if metric is Metric.COHERENCE else crp
        return PsSeries(fn(phase_difference(x, y)), metric)
    if window is None:
        raise InputError(f"metric {metric.value} needs a window")
    if not isinstance(window, WindowSpec):
        window = WindowSpec(window)
    length = window.length_samples
    offset = length - 1
    if metric is Metric.PW_CSW:
        x, y = prewhiten_ar1(x), prewhiten_ar1(y)
        offset += 1
    min_len = _MIN_WINDOW.get(metric, 3)
    if length < min_len:
        raise InputError(f"{metric.value} needs windows of at least {min_len} samples")
    if x.shape[-1] < length:
        raise WindowTooLongError(f"window of {length} samples exceeds series length {x.shape[-1]}")
    kernel = window_kernel(metric)
    if metric is Metric.TOROIDAL and kernel is _KERNEL_DEFAULTS[Metric.TOROIDAL]:
        values = _toroidal_sliding(x, y, length)
    elif metric is Metric.PLV:
        values = kernel(_windows(phase_difference(x, y), length))
    else:
        values = kernel(_windows(x, length), _windows(y, length))
    return PsSeries(np.asarray(values, dtype=float), metric, window, offset)


def pairwise_tensor(data, metric, window=None, tr_seconds=1.0, region_labels=None):
    """Evaluate ``metric`` for every region pair.

    Parameters
    ----------
    data : PhaseMatrix or array (R, T)
        Phases for phase metrics; band-passed signals for ``CSW``/``PW_CSW``.
    metric : Metric or str
    window : int or WindowSpec, optional
        Required for windowed metrics.
    """
    metric = Metric(metric)
    if hasattr(data, "phases"):
        tr_seconds = data.tr_seconds
        region_labels = region_labels or data.region_labels
        data = data.phases
    data = np.asarray(data, dtype=float)
    n_regions = data.shape[0]
    if n_regions < 2:
        raise InputError("pairwise_tensor needs at least two regions")
    if isinstance(window, WindowSpec):
        window = window.length_samples
    pairs = pair_index(n_regions)
    if metric is Metric.PW_CSW:
        # prewhiten each region once instead of once per pair
        white = np.stack([prewhiten_ar1(row) for row in data])
        length = WindowSpec(window).length_samples
        if white.shape[1] < length:
            raise WindowTooLongError(f"window of {length} samples exceeds series length {white.shape[1]}")
        wins = _windows(white, length)
        kernel = window_kernel(Metric.CSW)
        values = np.stack([kernel(wins[i], wins[j]) for i, j in pairs])
        offset = length
    else:
        rows = [sliding_apply(metric, data[i], data[j], window) for i, j in pairs]
        values = np.stack([r.values for r in rows])
        offset = rows[0].offset
    return PsTensor(values, n_regions, metric, window if metric.windowed else None,
                    offset, tr_seconds, region_labels)


def check_range(values, metric, tol=1e-12):
    """True if every non-missing value lies inside the metric's range."""
    lo, hi = Metric(metric).bounds
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    return bool(np.all((v >= lo - tol) & (v <= hi + tol)))


_KERNEL_DEFAULTS.update({m: globals()[name] for m, name in _WINDOW_KERNELS.items()})
