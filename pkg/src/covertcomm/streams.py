"""Counter-based random streams keyed by integer tuples.

Every random draw in the package comes from a Philox generator whose key is
derived from a master seed plus a tuple of integer labels, so a trial or a
codebook block can be regenerated in isolation and in any order.
"""
from __future__ import annotations

import hashlib
import os

import numpy as np

DEFAULT_SEED = 0x5EEDC0DE

_TAGS: dict[str, int] = {}


def tag(name: str) -> int:
    """Stable 32-bit integer for a stream label."""
    if name not in _TAGS:
        _TAGS[name] = int.from_bytes(hashlib.blake2b(name.encode(), digest_size=4).digest(), "little")
    return _TAGS[name]


def stream(seed: int, *labels: int | str) -> np.random.Generator:
    key = tuple(tag(x) if isinstance(x, str) else int(x) for x in labels)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def resolve_seed(seed: int | str | None) -> int:
    """Explicit seed, else $COVERT_SEED, else the package default."""
    if seed is None:
        seed = os.environ.get("COVERT_SEED")
    if seed is None:
        return DEFAULT_SEED
    if isinstance(seed, str):
        seed = int(seed, 0)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed
