"""Monte-Carlo simulation studies for the synchronization metrics.

Three scenarios are available, each producing a pair of series sampled
every ``tr_seconds``:

``NULL_CPP``
    Two independent Gaussian white-noise series; the extracted phase of the
    second series is replaced by a CPP surrogate, so there is no phase
    relation at all.
``RAMP``
    Two noisy cosines at ``f0_hz``; the second one acquires a phase shift that
    is zero up to ``t0_seconds`` and then rises linearly to ``4*pi`` at the last
    sample.
``SIGMOID``
    As ``RAMP`` but with the shift ``a / (1 + exp(b * (t - t0)))`` which passes
    through anti-phase (``a/2 = pi``) at ``t0``.

:func:`run_simulation` repeats a scenario ``n_realizations`` times, evaluates
every configured metric and window and summarises each time point by the
mean and a 95% band across replicates.
"""

import dataclasses
import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import psmetrics
from ._parallel import ordered_map
from .exceptions import InputError, TooFewCyclesError
from .psmetrics import Metric, PS_METRICS
from .signals import BandSpec, RoiDataset, analytic_signal, design_butterworth_bandpass, filtfilt
from .surrogates import cpp_surrogate, make_rng

Z95 = 1.959963984540054
MAX_SURROGATE_ATTEMPTS = 100


class SimId(str, enum.Enum):
    NULL_CPP = "null"
    RAMP = "ramp"
    SIGMOID = "sigmoid"

    @classmethod
    def parse(cls, name):
        key = str(name).strip().lower()
        aliases = {"null_cpp": "null", "sim1": "null", "sim2": "ramp", "sim3": "sigmoid"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InputError(f"unknown simulation {name!r} (choose from null, ramp, sigmoid)") from None


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation arm.  Times are in seconds."""

    sim_id: SimId = SimId.NULL_CPP
    tr_seconds: float = 2.0
    n_samples: int = 210
    f0_hz: float = 0.05
    t0_seconds: float = 170.0
    a: float = 2 * np.pi
    b: float = -0.01
    amp_x: float = 1.0
    amp_y: float = 1.0
    noise_sd: float = 1.0
    band: BandSpec = BandSpec(0.03, 0.07, 5)
    windows: tuple = (30, 60, 120)
    metrics: tuple = PS_METRICS
    n_realizations: int = 1000
    seed: int = 0
    filtering: bool = True
    # "normalized": shift reaches 4*pi at the last sample; "raw": 4*pi*(t - t0)
    ramp_mode: str = "normalized"
    # "population": mean +/- 1.96 SD; "sem": mean +/- 1.96 SD / sqrt(n)
    band_mode: str = "population"

    def __post_init__(self):
        object.__setattr__(self, "sim_id", SimId.parse(self.sim_id) if not isinstance(self.sim_id, SimId) else self.sim_id)
        object.__setattr__(self, "windows", tuple(int(w) for w in self.windows))
        object.__setattr__(self, "metrics", tuple(Metric.parse(m) if not isinstance(m, Metric) else m
                                                  for m in self.metrics))
        if isinstance(self.band, (tuple, list)):
            object.__setattr__(self, "band", BandSpec(*self.band))

    def validate(self):
        if self.n_realizations < 1:
            raise InputError("n_realizations must be >= 1")
        if self.n_samples < 34:
            raise InputError("n_samples too small for the band-pass filter (need > 33)")
        if self.tr_seconds <= 0:
            raise InputError("tr_seconds must be positive")
        if not self.t0_seconds < self.n_samples * self.tr_seconds:
            raise InputError("t0_seconds must fall inside the simulated record")
        if self.ramp_mode not in ("normalized", "raw"):
            raise InputError(f"ramp_mode must be 'normalized' or 'raw', got {self.ramp_mode!r}")
        if self.band_mode not in ("population", "sem"):
            raise InputError(f"band_mode must be 'population' or 'sem', got {self.band_mode!r}")
        for m in self.metrics:
            if not m.uses_phase:
                raise InputError(f"metric {m.value} is not a phase-synchronization metric")
        for w in self.windows:
            if not 3 <= w <= self.n_samples:
                raise InputError(f"window {w} must lie in [3, n_samples]")
        self.band.validate(self.tr_seconds)
        return self

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["sim_id"] = self.sim_id.value
        d["metrics"] = [m.value for m in self.metrics]
        d["windows"] = list(self.windows)
        d["band"] = {"low_hz": self.band.low_hz, "high_hz": self.band.high_hz,
                     "order": self.band.order}
        return d

    @property
    def times_s(self):
        return np.arange(self.n_samples) * self.tr_seconds

    @property
    def cells(self):
        """``(metric, window)`` keys of the summary; window is None for IPS."""
        keys = []
        for m in self.metrics:
            if m.windowed:
                keys.extend((m, w) for w in self.windows)
            else:
                keys.append((m, None))
        return keys


# --- signal generators ------------------------------------------------------

def phase_shift(config):
    """Ground-truth phase shift of ``y`` relative to ``x`` at every sample."""
    t = config.times_s
    if config.sim_id is SimId.RAMP:
        ramp = np.maximum(t - config.t0_seconds, 0.0)
        if config.ramp_mode == "normalized":
            ramp = ramp / (t[-1] - config.t0_seconds)
        return 4 * np.pi * ramp
    if config.sim_id is SimId.SIGMOID:
        return config.a / (1.0 + np.exp(config.b * (t - config.t0_seconds)))
    return np.zeros_like(t)


def _noisy_cosines(config, rng):
    t = config.times_s
    w0 = 2 * np.pi * config.f0_hz
    ex = rng.standard_normal(config.n_samples)
    ey = rng.standard_normal(config.n_samples)
    x = config.amp_x * np.cos(w0 * t) + config.noise_sd * ex
    y = config.amp_y * np.cos(w0 * t + phase_shift(config)) + config.noise_sd * ey
    return x, y


def gen_null_pair(config, rng):
    """Two independent Gaussian series with standard deviation ``noise_sd``."""
    x = config.noise_sd * rng.standard_normal(config.n_samples)
    y = config.noise_sd * rng.standard_normal(config.n_samples)
    return x, y


def gen_ramp_pair(config, rng):
    return _noisy_cosines(config, rng)


def gen_sigmoid_pair(config, rng):
    return _noisy_cosines(config, rng)


_GENERATORS = {
    SimId.NULL_CPP: gen_null_pair,
    SimId.RAMP: gen_ramp_pair,
    SimId.SIGMOID: gen_sigmoid_pair,
}


def generate_pair(config, rng):
    return _GENERATORS[config.sim_id](config, rng)


# --- Monte-Carlo loop -------------------------------------------------------

def _phases(config, coeffs, x, y):
    pair = np.vstack([x, y])
    if config.filtering:
        pair = filtfilt(coeffs, pair)
    phases = analytic_signal(pair).phase
    return phases[0], phases[1]


def run_replicate(config, index, coeffs=None):
    """One replicate: ``({(metric, window): values}, failed_attempts)``.

    Replicate ``index`` draws from stream ``(seed, index, attempt)``.  When
    the CPP surrogate cannot be built the attempt counter is bumped and the
    pair is redrawn.
    """
    if coeffs is None:
        coeffs = design_butterworth_bandpass(config.band, config.tr_seconds)
    for attempt in range(MAX_SURROGATE_ATTEMPTS):
        rng = make_rng(config.seed, index, attempt)
        x, y = generate_pair(config, rng)
        px, py = _phases(config, coeffs, x, y)
        if config.sim_id is SimId.NULL_CPP:
            try:
                py = cpp_surrogate(py, rng)
            except TooFewCyclesError:
                continue
        break
    else:
        raise TooFewCyclesError(
            f"replicate {index}: no valid surrogate after {MAX_SURROGATE_ATTEMPTS} attempts")
    out = {}
    for metric, window in config.cells:
        out[(metric, window)] = psmetrics.sliding_apply(metric, px, py, window).values
    return out, attempt


@dataclass
class CellSummary:
    """Per-time-point summary of one metric (and window) across replicates."""

    mean: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    sd: np.ndarray
    n_valid: np.ndarray
    offset: int = 0

    @property
    def invalid(self):
        """Time points where no replicate produced a value."""
        return self.n_valid == 0

    def times_s(self, tr_seconds):
        return (self.offset + np.arange(self.mean.size)) * tr_seconds


def summarize(stack, band_mode="population"):
    """Pointwise mean and 95% band over the rows of ``stack``.

    The band is ``mean +/- 1.96 * SD`` with the sample SD (``ddof=1``) over
    the non-missing entries of each column; ``band_mode="sem"`` divides the SD
    by ``sqrt(n_valid)``.  Columns without any valid entry yield NaN and
    ``n_valid == 0``.  Bands are not clipped to the metric's range.
    """
    stack = np.atleast_2d(np.asarray(stack, dtype=float))
    valid = ~np.isnan(stack)
    n_valid = valid.sum(axis=0)
    filled = np.where(valid, stack, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = filled.sum(axis=0) / n_valid
        dev = np.where(valid, stack - mean, 0.0)
        sd = np.sqrt((dev * dev).sum(axis=0) / (n_valid - 1))
    sd = np.where(n_valid >= 2, sd, np.nan)
    half = Z95 * sd
    if band_mode == "sem":
        half = half / np.sqrt(n_valid)
    return CellSummary(mean, mean - half, mean + half, sd, n_valid)


@dataclass
class SimSummary:
    config: SimConfig
    cells: dict = field(default_factory=dict)
    surrogate_failures: int = 0
    wall_seconds: float = 0.0

    def cell(self, metric, window=None):
        metric = Metric.parse(metric) if not isinstance(metric, Metric) else metric
        return self.cells[(metric, window if metric.windowed else None)]


def run_simulation(config, keep_replicates=False):
    """Run all replicates of ``config`` and summarise every cell.

    Replicates run in parallel (see ``PHASESYNC_THREADS``); each one owns its
    random stream and the reduction is done in replicate order, so results
    do not depend on the number of workers.
    """
    config.validate()
    coeffs = design_butterworth_bandpass(config.band, config.tr_seconds)
    started = time.perf_counter()
    results = ordered_map(lambda i: run_replicate(config, i, coeffs), range(config.n_realizations))
    summary = SimSummary(config)
    summary.surrogate_failures = int(sum(fails for _, fails in results))
    for key in config.cells:
        stack = np.stack([res[key] for res, _ in results])
        metric, window = key
        cell = summarize(stack, config.band_mode)
        if metric.windowed:
            cell.offset = window - 1
        summary.cells[key] = cell
        if keep_replicates:
            cell.replicates = stack
    summary.wall_seconds = time.perf_counter() - started
    return summary


# --- planted two-state data for clustering checks ---------------------------

def planted_state_offsets(n_regions):
    """Per-region phase offsets of the two planted states.

    State 0 splits the regions into two anti-phase halves, state 1 into
    even and odd regions.
    """
    r = np.arange(n_regions)
    state0 = np.where(r < n_regions // 2, 0.0, np.pi)
    state1 = np.where(r % 2 == 0, 0.0, np.pi)
    return np.vstack([state0, state1])


def gen_two_state_group(n_subjects=5, n_regions=8, n_samples=600, block=150,
                        tr_seconds=2.0, f0_hz=0.05, amp=1.0, noise_sd=0.5, seed=0):
    """Multi-subject recordings that alternate between two phase patterns.

    Every region carries a cosine at ``f0_hz`` whose phase offset is set by
    the active state; the state switches every ``block`` samples.  Odd
    subjects start in the other state.

    Returns
    -------
    datasets : list of RoiDataset
    labels : list of int arrays, the planted state of every sample
    """
    offsets = planted_state_offsets(n_regions)
    t = np.arange(n_samples) * tr_seconds
    datasets, labels = [], []
    for s in range(n_subjects):
        rng = make_rng(seed, s)
        state = ((np.arange(n_samples) // block) + s) % 2
        phase = 2 * np.pi * f0_hz * t + offsets[state].T
        values = amp * np.cos(phase) + noise_sd * rng.standard_normal((n_regions, n_samples))
        datasets.append(RoiDataset(values, tr_seconds))
        labels.append(state)
    return datasets, labels
