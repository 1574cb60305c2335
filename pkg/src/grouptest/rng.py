"""Counter-based random substreams.

Every random quantity in the package is drawn from a Philox generator whose
128-bit key is a blake2b hash of (seed, *path). Streams are therefore
independent of generation order and thread count: the same (seed, path)
always yields the same stream, and disjoint paths never collide.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

# stream tags for experiment trials
STREAM_MATRIX = 0
STREAM_DEFECTIVES = 1
STREAM_OUTCOMES = 2


def _key(seed: int, path: tuple[int, ...]) -> int:
    packed = struct.pack("<%dq" % (1 + len(path)), seed & 0x7FFFFFFFFFFFFFFF, *path)
    digest = hashlib.blake2b(packed, digest_size=16).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, *path: int) -> np.random.Generator:
    """Deterministic generator for the given (seed, path) coordinates."""
    return np.random.Generator(np.random.Philox(key=_key(seed, tuple(path))))


def derive_seed(seed: int, *path: int) -> int:
    """64-bit sub-seed for handing to components that take a seed of their own."""
    return _key(seed, tuple(path)) & 0x7FFFFFFFFFFFFFFF
