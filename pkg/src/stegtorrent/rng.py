"""Seeded random streams.

Every stochastic component draws from numpy's ``Generator`` over the PCG64
bit generator, seeded through ``SeedSequence``.  Independent sub-streams are
derived by appending integer keys to the seed's ``spawn_key``, so a stream
depends only on (master seed, key path) and never on call order.
"""
from __future__ import annotations

import zlib

import numpy as np


def key_of(label) -> int:
    """Stable 32-bit key for a string or int label (CRC-32 for strings)."""
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def generator(seed, *path) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(key_of(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *path) -> int:
    """A 32-bit integer seed for the sub-stream at ``path`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(key_of(p) for p in path))
    return int(ss.generate_state(1)[0])


def spaced_times(count, rate_pps, rng) -> np.ndarray:
    """Strictly increasing integer microsecond times, about ``1/rate_pps`` apart.

    Each gap is the nominal gap scaled by uniform(0.5, 1.5), at least 1 us.
    """
    if rate_pps <= 0:
        raise ValueError("rate_pps must be positive")
    nominal = 1e6 / rate_pps
    gaps = np.maximum(1, np.rint(nominal * rng.uniform(0.5, 1.5, size=count))).astype(np.int64)
    return np.cumsum(gaps)
