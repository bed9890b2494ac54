"""Deterministic seed derivation so every operation owns an independent stream."""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def derive_seed(seed: int, *keys) -> int:
    """Map ``(seed, *keys)`` to a 63-bit seed, stable across runs and platforms."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
