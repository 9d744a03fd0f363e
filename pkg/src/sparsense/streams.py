"""Deterministic random streams.

All randomness in the package is drawn from Philox4x64 counter-based
generators keyed as (seed, tag << 48 | index). Distinct (seed, tag, index)
triples give independent streams, so matrix columns, column offsets, trial
spectra and trial noise never share a stream even under one seed.
"""

import numpy as np

MAX_SEED = 2**64 - 1

# stream tags (namespace within one seed)
TAG_COLUMN = 0
TAG_OFFSET = 1
TAG_SPECTRUM = 2
TAG_NOISE = 3

_MIX = 0x9E3779B97F4A7C15  # splitmix64 increment, used to derive sub-seeds


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, tag, index)."""
    if not 0 <= index < 2**48:
        raise ValueError(f"stream index out of range: {index}")
    key = np.array([check_seed(seed), (tag << 48) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, salt: int) -> int:
    """Derived 64-bit seed for auxiliary objects (e.g. per-grid-point matrices)."""
    return (check_seed(seed) + _MIX * (salt + 1)) % (MAX_SEED + 1)
