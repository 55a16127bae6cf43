"""Counter-based per-trajectory random streams.

Stream derivation (part of the output contract, do not change lightly):

    mix64(z)       SplitMix64 finalizer on 64-bit words
    key(seed, i)   = mix64(mix64(seed) XOR i)
    draw(key, k)   = mix64(key + (k + 1) * 0x9E3779B97F4A7C15)     (mod 2**64)
    uniform        = (draw >> 11) * 2**-53                         in [0, 1)

so the k-th number of stream i is the k-th output of a SplitMix64 generator
seeded with ``key(seed, i)``. Every draw is addressable by (trajectory, k),
which makes results independent of batching, thread count and execution
order, and lets whole batches of trajectories be advanced with numpy.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _seed_word(seed: int) -> np.uint64:
    if seed < 0 or seed > _MASK:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.uint64(seed)


def stream_keys(seed: int, indices) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.uint64)
    base = mix64(np.array([_seed_word(seed)], dtype=np.uint64))[0]
    return mix64(base ^ idx)


def uniforms(keys: np.ndarray, k: int) -> np.ndarray:
    """The k-th uniform of each stream in ``keys``."""
    with np.errstate(over="ignore"):
        ctr = keys + np.uint64(k + 1) * GOLDEN
    return (mix64(ctr) >> np.uint64(11)).astype(np.float64) * (2.0**-53)


class CounterStream:
    """Sequential view of one trajectory's stream, with a ``random()`` method
    compatible with ``numpy.random.Generator`` for scalar draws."""

    def __init__(self, seed: int, index: int = 0):
        self.seed = seed
        self.index = index
        self._key = stream_keys(seed, [index])
        self.counter = 0

    def at(self, k: int) -> float:
        return float(uniforms(self._key, k)[0])

    def random(self) -> float:
        u = self.at(self.counter)
        self.counter += 1
        return u
