"""Named, independent RNG streams derived from a master seed.

Every stream is keyed by the master seed plus a tuple of labels, so the
draws a client makes in round ``r`` never depend on which other clients ran
first or on how work was scheduled across threads.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode()) | (1 << 32)
    part = int(part)
    if part < 0:
        raise ValueError(f"stream keys must be non-negative, got {part}")
    return part


def derive_seed(master_seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=tuple(_key(k) for k in keys))


def derive_rng(master_seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *keys))


def derive_int(master_seed: int, *keys) -> int:
    """A 63-bit integer seed for configs that take a plain seed."""
    return int(derive_seed(master_seed, *keys).generate_state(1, np.uint64)[0] >> np.uint64(1))
