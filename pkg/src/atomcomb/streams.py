"""Deterministic counter-based random streams.

Every stream is a Philox generator whose key is a SplitMix64 mix of the master
seed and a stream path, and whose counter selects a block.  Block ``b`` of a
stream is reproducible without generating blocks ``0..b-1``, so work can be
split across processes in any order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["mix64", "derive_seed", "stream", "block_stream", "DEFAULT_SEED"]

DEFAULT_SEED = 20240521
_MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def _tag(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode()) | (1 << 40)
    return int(part) & _MASK


def derive_seed(master_seed: int, *path) -> int:
    """Stable 64-bit seed for ``(master_seed, *path)``; path items are ints or strings."""
    h = mix64(int(master_seed) & _MASK)
    for part in path:
        h = mix64(h ^ _tag(part))
    return h


def stream(master_seed: int, *path) -> np.random.Generator:
    """Generator for the substream ``path`` of ``master_seed``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(master_seed, *path)))


def block_stream(master_seed: int, block: int, *path) -> np.random.Generator:
    """Generator positioned at counter block ``block`` of the substream ``path``."""
    bitgen = np.random.Philox(key=derive_seed(master_seed, *path), counter=[0, 0, int(block), 0])
    return np.random.Generator(bitgen)
