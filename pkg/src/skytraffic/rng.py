"""Counter-based pseudo-random numbers for synthetic scenes.

The generator is a stateless splitmix64-style hash: a 64-bit counter is
mixed through xorshift-multiply rounds with fixed published constants.
Identical (seed, stream, counter) triples give identical outputs on any
platform, which keeps rendered frames bit-reproducible. numpy's default
generator is deliberately not used for frame content.

Constants:
    GOLDEN = 0x9E3779B97F4A7C15   counter spacing (2^64 / phi)
    MIX1   = 0xBF58476D1CE4E5B9   first multiply
    MIX2   = 0x94D049BB133111EB   second multiply
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)

_U64 = np.uint64
_INV_2_53 = 1.0 / float(1 << 53)


_MASK64 = (1 << 64) - 1


def mix64(z):
    """Finalizing mixer. z is a uint64 array."""
    z = (z ^ (z >> _U64(30))) * MIX1
    z = (z ^ (z >> _U64(27))) * MIX2
    return z ^ (z >> _U64(31))


def _mix64_int(z):
    # Python-int variant; numpy uint64 scalars warn on wraparound
    z &= _MASK64
    z = ((z ^ (z >> 30)) * int(MIX1)) & _MASK64
    z = ((z ^ (z >> 27)) * int(MIX2)) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream_key(seed, stream):
    """Derive the 64-bit key for one named substream of a seed.

    Separate streams (frame noise, background texture, ...) must never
    share counters, so each gets an independently mixed key.
    """
    base = _mix64_int((int(seed) + int(GOLDEN) * int(stream)) & _MASK64)
    return _U64((base + int(GOLDEN)) & _MASK64)


def hash_u64(counters, key):
    counters = np.asarray(counters, dtype=np.uint64)
    # 0-d arrays decay to numpy scalars whose overflow warns; keep >= 1-d
    scalar = counters.ndim == 0
    out = mix64((np.atleast_1d(counters) + _U64(1)) * GOLDEN + key)
    return out[0] if scalar else out


def uniform01(counters, key):
    """Uniform float64 in [0, 1) from the top 53 bits of the hash."""
    bits = hash_u64(counters, key) >> _U64(11)
    return bits.astype(np.float64) * _INV_2_53


# Uniform noise on [-sigma*sqrt(3), sigma*sqrt(3)) has standard deviation
# exactly sigma and needs no transcendental functions.
_SQRT3 = float(np.sqrt(3.0))


def centered_noise(counters, key, sigma):
    if sigma == 0.0:
        return np.zeros(np.shape(counters), dtype=np.float64)
    u = uniform01(counters, key)
    return (u - 0.5) * (2.0 * _SQRT3 * sigma)
