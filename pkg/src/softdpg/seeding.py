"""Named, independent random substreams from one master seed.

Every consumer of randomness in a run (environment resets, weight init,
exploration noise, smoothing noise, batch sampling, evaluation) gets its
own stream keyed by (master seed, name). Streams are counter-based Philox
generators keyed through sha256, so adding a new named consumer never
shifts the draws any existing consumer sees.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream_key", "substream"]


def substream_key(master_seed: int, name: str) -> np.ndarray:
    """Two little-endian uint64 words from sha256("<seed>:<name>")."""
    digest = hashlib.sha256(f"{int(master_seed)}:{name}".encode()).digest()
    return np.frombuffer(digest[:16], dtype="<u8").copy()


def substream(master_seed: int, name: str) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=substream_key(master_seed, name)))
