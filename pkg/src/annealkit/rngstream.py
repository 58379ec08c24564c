"""Counter-based splittable random streams (SplitMix64 mixing).

Each stream is identified by a 64-bit key; draw t of a stream is

    mix64(key + GOLDEN * (t + 1)),

so draws are random-access and two streams with different keys are
independent for practical purposes. Substreams are derived by hashing the
parent key with a tag, which keeps e.g. initial-condition draws and
dynamics draws decoupled: changing how many numbers the initializer
consumes cannot shift the dynamics sequence.

The same mixing runs inside numba kernels (scalar uint64 arithmetic) and
in vectorized numpy (array uint64 arithmetic); both wrap mod 2^64.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# substream tags
TAG_INIT = np.uint64(0x1)
TAG_DYNAMICS = np.uint64(0x2)


def mix64(z):
    """SplitMix64 finalizer; accepts a uint64 scalar or array."""
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def stream_key(seed: int, tag: np.uint64) -> np.uint64:
    """Derive a substream key from a 64-bit seed and a tag."""
    with np.errstate(over="ignore"):
        return mix64(mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF)) ^ (GOLDEN * tag))


def uniforms(key: np.uint64, start: int, count: int) -> np.ndarray:
    """Draws start .. start+count-1 of the stream as floats in [0, 1)."""
    with np.errstate(over="ignore"):
        counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        bits = mix64(key + GOLDEN * counters)
    return (bits >> _S11) * _INV53
