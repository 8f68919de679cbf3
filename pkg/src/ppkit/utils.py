"""Shared helpers: seeding, chunked parallel map, log-space reductions."""

from __future__ import annotations

import os

import numpy as np


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, stream...); streams never collide."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream)))


def thread_cap() -> int:
    """Parallelism cap from PPKIT_THREADS (>=1); 1 disables threading."""
    try:
        return max(1, int(os.environ.get("PPKIT_THREADS", "1")))
    except ValueError:
        return 1


def chunked_map(fn, arrays, n_chunks=None):
    """Apply fn to row-chunks of the given arrays and concatenate the results.

    Chunks run in a thread pool when PPKIT_THREADS > 1; the chunk layout is
    independent of the thread count so results are bit-stable.
    """
    n = len(arrays[0])
    cap = thread_cap()
    if n_chunks is None:
        n_chunks = cap
    if n_chunks <= 1 or n < 2 * n_chunks:
        return fn(*arrays)
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    jobs = [tuple(a[lo:hi] for a in arrays) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if cap > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cap) as pool:
            parts = list(pool.map(lambda args: fn(*args), jobs))
    else:
        parts = [fn(*args) for args in jobs]
    return np.concatenate(parts)


def logsumexp(values: np.ndarray) -> float:
    """log(sum(exp(values))) without overflow; -inf for an empty input."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return -np.inf
    m = np.max(values)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(values - m))))


def pairwise_sum(values: np.ndarray) -> float:
    """Fixed-tree pairwise reduction; summation order independent of chunking."""
    v = np.asarray(values, dtype=float)
    while v.size > 1:
        if v.size % 2:
            v = np.concatenate([v, [0.0]])
        v = v[0::2] + v[1::2]
    return float(v[0]) if v.size else 0.0
