"""Deterministic counter-based random streams.

Every random quantity in the package is a pure function of
``(seed, label, counter)``: a splitmix64-style finalizer hashes the
counter into 64 random-looking bits, and Gaussian variates come from
Box-Muller applied to two such hashes.  There is no hidden generator
state, so values do not depend on evaluation order, parallel execution
is deterministic, and reruns are bit-identical across platforms.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_TWO_PI = 2.0 * np.pi


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _label_key(label: str) -> int:
    # FNV-1a; stable across processes, unlike builtin hash()
    h = _FNV_OFFSET
    for b in label.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def raw64(seed: int, label: str, counters) -> np.ndarray:
    """64 hashed bits per counter, as a uint64 array."""
    c = np.atleast_1d(np.asarray(counters, dtype=np.uint64))
    base = np.uint64((int(seed) ^ _label_key(label)) & 0xFFFFFFFFFFFFFFFF)
    return _finalize(base + (c + np.uint64(1)) * _GOLDEN)


def uniform(seed: int, label: str, counters) -> np.ndarray:
    """Uniform float64 in [0, 1), one value per counter."""
    return (raw64(seed, label, counters) >> np.uint64(11)) * 2.0**-53


def gaussian(seed: int, label: str, counters) -> np.ndarray:
    """Standard normal variates via Box-Muller.

    The variate for counter c consumes hash lanes 2c and 2c+1, so
    disjoint counter sets give independent values.
    """
    c = np.atleast_1d(np.asarray(counters, dtype=np.uint64))
    u1 = uniform(seed, label, c * np.uint64(2))
    u2 = uniform(seed, label, c * np.uint64(2) + np.uint64(1))
    # 1 - u1 lies in (0, 1]: log() is safe
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(_TWO_PI * u2)


def signs(seed: int, label: str, counters) -> np.ndarray:
    """Equiprobable +-1.0 per counter."""
    bit = raw64(seed, label, counters) >> np.uint64(63)
    return bit.astype(np.float64) * 2.0 - 1.0


def permutation(seed: int, label: str, n: int) -> np.ndarray:
    """A fixed pseudorandom permutation of range(n)."""
    return np.argsort(raw64(seed, label, np.arange(n)), kind="stable")
