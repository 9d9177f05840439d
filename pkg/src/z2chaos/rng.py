"""Deterministic counter-based random streams.

Every stochastic step draws from a Philox generator keyed by the root seed
plus a named path (e.g. ("measure", state_idx, time_idx, basis_idx)), so any
intermediate artifact can be regenerated in isolation.
"""
from __future__ import annotations

import zlib

import numpy as np


def _encode(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def substream(root_seed: int, *path) -> np.random.Generator:
    """Independent generator for the given (seed, path) pair."""
    seq = np.random.SeedSequence(entropy=int(root_seed),
                                 spawn_key=tuple(_encode(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(root_seed: int, *path) -> int:
    """Well-separated integer seed for the given path (for APIs taking an int)."""
    seq = np.random.SeedSequence(entropy=int(root_seed),
                                 spawn_key=tuple(_encode(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
