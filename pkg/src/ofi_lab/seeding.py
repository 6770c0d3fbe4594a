"""Seed handling.

Every random stream is derived from a root integer seed plus a tuple of
stream indices through :class:`numpy.random.SeedSequence` spawn keys, so a
batch's stream depends only on ``(seed, index)`` and never on scheduling.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BATCH = 20_000


def make_rng(seed, *stream):
    """Return a Generator for ``seed`` and an optional stream path.

    ``seed`` may also be an existing Generator, which is returned unchanged
    when no stream path is given.
    """
    if isinstance(seed, np.random.Generator):
        if stream:
            seed = int(seed.integers(0, 2**63))
        else:
            return seed
    if seed is None:
        seed = 0
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_threads(threads=None):
    if threads is None:
        threads = int(os.environ.get("OFI_LAB_THREADS", "1") or 1)
    return max(1, int(threads))


def batched(fn, n, seed, *stream, batch_size=DEFAULT_BATCH, threads=None):
    """Run ``fn(rng, size)`` over fixed-size batches and concatenate.

    Batch ``i`` always gets ``make_rng(seed, *stream, i)``; results are joined
    in batch order, so the output is identical for any thread count.
    """
    if isinstance(seed, np.random.Generator):
        # fix the base seed up front so batch streams do not depend on scheduling
        seed = int(seed.integers(0, 2**63))
    sizes = [batch_size] * (n // batch_size)
    if n % batch_size:
        sizes.append(n % batch_size)

    def run(i):
        return fn(make_rng(seed, *stream, i), sizes[i])

    threads = resolve_threads(threads)
    if threads == 1 or len(sizes) <= 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)
