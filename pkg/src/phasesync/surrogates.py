"""Cyclic phase permutation (CPP) surrogates and seeded random streams.

A CPP surrogate cuts a wrapped phase series into its complete cycles and
shuffles them.  The phase dynamics of the series survive (every cycle is
kept intact) while any alignment with another series is destroyed, which
makes it a null model for phase synchronization.

Cycles are delimited by wrap events, i.e. samples where the wrapped phase
drops by more than pi (a crossing from near +pi to near -pi).  The partial
runs before the first and after the last event stay in place.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, TooFewCyclesError

MIN_WRAP_EVENTS = 3


@dataclass(frozen=True)
class SurrogateSpec:
    seed: int
    n_realizations: int = 1

    def __post_init__(self):
        if self.n_realizations < 1:
            raise InputError("n_realizations must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")


def make_rng(seed, stream_id=0, substream=0):
    """Independent, reproducible generator for ``(seed, stream_id, substream)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so distinct ids give statistically independent generators and the same
    triple always reproduces the same draws.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id), int(substream)))
    return np.random.Generator(np.random.PCG64(ss))


def wrap_events(phase):
    """Indices ``k`` where ``phase[k] - phase[k-1] < -pi``."""
    phase = np.asarray(phase, dtype=float)
    return np.flatnonzero(np.diff(phase) < -np.pi) + 1


def segment_cycles(phase):
    """Split a wrapped phase series into ``(head, cycles, tail)``.

    ``np.concatenate([head, *cycles, tail])`` reproduces ``phase``.

    Raises
    ------
    TooFewCyclesError
        With fewer than three wrap events (fewer than two complete cycles
        there is nothing worth permuting).
    """
    phase = np.asarray(phase, dtype=float)
    events = wrap_events(phase)
    if events.size < MIN_WRAP_EVENTS:
        raise TooFewCyclesError(
            f"phase has {events.size} wrap events, CPP needs at least {MIN_WRAP_EVENTS}")
    head = phase[:events[0]]
    cycles = [phase[a:b] for a, b in zip(events[:-1], events[1:])]
    tail = phase[events[-1]:]
    return head, cycles, tail


def cpp_surrogate(phase, rng):
    """Permute the complete cycles of ``phase`` uniformly at random."""
    head, cycles, tail = segment_cycles(phase)
    order = rng.permutation(len(cycles))
    return np.concatenate([head, *(cycles[k] for k in order), tail])
