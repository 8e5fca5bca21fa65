"""Seeded random streams.

Split rule: stream ``i`` of a run with master seed ``s`` is the numpy
``SeedSequence(s, spawn_key=(i,))``. Every Monte Carlo routine draws each
replication (or fixed-size chunk of replications) from its own stream, so
results do not depend on how work is scheduled across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SEED = 20240101


def as_seed(rng) -> int:
    """Reduce ``rng`` (int, SeedSequence, Generator or None) to a 64-bit seed."""
    if rng is None:
        return DEFAULT_SEED
    if isinstance(rng, (int, np.integer)):
        if rng < 0:
            raise ValueError("seed must be non-negative")
        return int(rng)
    if isinstance(rng, np.random.SeedSequence):
        return int(rng.generate_state(1, dtype=np.uint64)[0])
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    raise TypeError(f"cannot derive a seed from {type(rng).__name__}")


def substream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def default_threads() -> int:
    return os.cpu_count() or 1


def map_streams(fn, seed: int, count: int, threads: int | None = None) -> list:
    """Evaluate ``fn(index, generator)`` for ``index < count``, each on its own
    substream. Output order is by index regardless of ``threads``."""
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or count == 1:
        return [fn(i, substream(seed, i)) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: fn(i, substream(seed, i)), range(count)))
