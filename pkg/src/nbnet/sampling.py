"""Reproducible chunked sampling of uniform points in the open cube (0, 1)^d.

Chunk ``k`` covers samples ``[k * CHUNK, (k + 1) * CHUNK)`` and draws from its
own generator seeded by ``(seed, k)``.  Any partition of chunks over workers
therefore yields identical samples, and per-chunk results are always combined
in chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

CHUNK = 1 << 16
_SCALE = 2.0**-53

T = TypeVar("T")


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(chunk)])))


def chunk_points(seed: int, chunk: int, n: int, d: int) -> np.ndarray:
    """``n x d`` points strictly inside (0, 1); 0 and 1 are never produced."""
    rng = chunk_rng(seed, chunk)
    ints = rng.integers(0, 1 << 53, size=(n, d), dtype=np.int64)
    return (ints.astype(float) + 0.5) * _SCALE


def chunk_sizes(n_total: int) -> list[int]:
    n_chunks = math.ceil(n_total / CHUNK)
    return [min(CHUNK, n_total - k * CHUNK) for k in range(n_chunks)]


def map_chunks(
    func: Callable[[np.ndarray], T], seed: int, n_total: int, d: int, workers: int = 1
) -> list[T]:
    """Apply ``func`` to every chunk of points; results come back in chunk order."""
    sizes = chunk_sizes(n_total)

    def run(k: int) -> T:
        return func(chunk_points(seed, k, sizes[k], d))

    if workers <= 1 or len(sizes) <= 1:
        return [run(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sizes))))
