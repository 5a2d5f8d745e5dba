"""Seedable, splittable random streams.

Every stochastic routine in the package takes a :class:`RandomStream`
explicitly, so a run is bit-reproducible from its seed.  Work that is
partitioned into chunks draws each chunk from ``stream.child(k)``, which
keeps results independent of how the chunks are scheduled.
"""
from __future__ import annotations

import numpy as np


class RandomStream:
    """PCG64 generator keyed by ``(seed, spawn key)``.

    Unknown attributes are forwarded to the underlying
    :class:`numpy.random.Generator`, so ``stream.random(5)`` works.
    """

    def __init__(self, seed: int = 0, key: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a uint64, got {seed}")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key))
        )

    def child(self, index: int) -> "RandomStream":
        """Independent stream for sub-task ``index``; does not advance ``self``."""
        return RandomStream(self.seed, self.key + (int(index),))

    def __getattr__(self, name):
        return getattr(self.gen, name)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, key={self.key})"


def as_stream(rng) -> RandomStream:
    if isinstance(rng, RandomStream):
        return rng
    if rng is None:
        raise ValueError("an explicit RandomStream (or integer seed) is required")
    return RandomStream(int(rng))


def chunk_sizes(total: int, per_chunk: int) -> list[int]:
    per_chunk = max(1, int(per_chunk))
    full, rest = divmod(int(total), per_chunk)
    return [per_chunk] * full + ([rest] if rest else [])
