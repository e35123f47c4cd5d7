"""Counter-based (stateless) random numbers.

Every draw is a pure function of a 64-bit key and integer counters, so
lazily evaluated infinite fields can be queried in any order, from any
thread, and reproduce exactly across process restarts.  The mixer is
splitmix64, which is statistically solid for this kind of keyed use.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # golden-ratio increment


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def hash_counters(seed: int, *counters: int) -> int:
    """Collapse a seed and any number of integer counters into one uint64."""
    h = _mix((seed & _MASK) ^ _GAMMA)
    for c in counters:
        h = _mix(h ^ ((c * _GAMMA) & _MASK))
    return h


def uniform01(seed: int, *counters: int) -> float:
    """Uniform draw on [0, 1), a pure function of (seed, *counters)."""
    return (hash_counters(seed, *counters) >> 11) * 2.0**-53


def exponential(rate: float, seed: int, *counters: int) -> float:
    """Exponential(rate) draw keyed by (seed, *counters); always positive."""
    u = uniform01(seed, *counters)
    return -math.log1p(-u) / rate
