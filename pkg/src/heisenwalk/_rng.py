"""Seeded random streams.

Every experiment takes an integer seed (or an existing Generator) and
derives independent sub-streams from it with ``SeedSequence.spawn``.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn(seed, n: int) -> list[np.random.Generator]:
    """n independent generators derived from ``seed`` (merge order = index)."""
    if isinstance(seed, np.random.Generator):
        return [np.random.Generator(bg) for bg in seed.bit_generator.spawn(n)]
    return [
        np.random.Generator(np.random.PCG64(ss))
        for ss in np.random.SeedSequence(seed).spawn(n)
    ]


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [0, n) for arbitrarily large n."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n < 2**63:
        return int(rng.integers(0, n))
    nbits = (n - 1).bit_length()
    nbytes = (nbits + 7) // 8
    mask = (1 << nbits) - 1
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if x < n:
            return x
