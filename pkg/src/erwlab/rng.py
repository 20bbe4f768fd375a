"""Counter-based random streams built on the SplitMix64 output function.

A stream is identified by a 64-bit key. Its k-th uniform (k = 0, 1, ...) is

    u(key, k) = (mix64(key + (k + 1) * GOLDEN) >> 11) * 2**-53

which is exactly the k-th output of a SplitMix64 generator seeded with ``key``,
so any draw can be computed in isolation without replaying the stream.

Path ``i`` of an ensemble with base seed ``seed`` uses the key

    stream_key(seed, i) = mix64(seed + (i + 1) * GOLDEN)

i.e. the i-th SplitMix64 output of the base seed. Walk samplers consume
counter 0 for the first step and counter k for the step from time k to k + 1.
External tools can therefore regenerate any single path from (seed, i) alone.
"""

from __future__ import annotations

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 2.0**-53

# Salt for the auxiliary stream used to dither lattice values (see harness).
DITHER_SALT = 0xD1B54A32D192ED03


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int, modulo 2**64."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, index: int) -> int:
    """Key of substream ``index`` derived from a base ``seed``."""
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0:
        raise ValueError(f"stream index must be nonnegative, got {index}")
    return mix64(seed + (index + 1) * GOLDEN)


def uniform_at(key: int, counter: int) -> float:
    """The uniform in [0, 1) at position ``counter`` of stream ``key``."""
    return (mix64(key + (counter + 1) * GOLDEN) >> 11) * _TO_UNIT


class CounterStream:
    """Sequential view of a counter-based stream.

    Used by the step-level API (``first_step``, ``advance``) and by tests; the
    compiled ensemble kernels evaluate the same function directly.
    """

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK64
        self.counter = counter

    @classmethod
    def for_path(cls, seed: int, index: int = 0) -> "CounterStream":
        return cls(stream_key(seed, index))

    def uniform(self) -> float:
        u = uniform_at(self.key, self.counter)
        self.counter += 1
        return u

    def __repr__(self) -> str:
        return f"CounterStream(key={self.key:#018x}, counter={self.counter})"


# Compiled twins. All arithmetic stays in uint64 so numba wraps instead of
# promoting to float64.

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_U1 = np.uint64(1)


@numba.njit(inline="always", cache=True)
def nb_mix64(z):
    z = (z ^ (z >> _U30)) * _U_M1
    z = (z ^ (z >> _U27)) * _U_M2
    return z ^ (z >> _U31)


@numba.njit(inline="always", cache=True)
def nb_stream_key(seed, index):
    return nb_mix64(seed + (index + _U1) * _U_GOLDEN)


@numba.njit(inline="always", cache=True)
def nb_uniform_at(key, counter):
    return np.float64(nb_mix64(key + (counter + _U1) * _U_GOLDEN) >> _U11) * _TO_UNIT
