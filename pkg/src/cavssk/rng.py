"""Seeded, splittable random streams.

Every stream is derived from a root integer seed plus a tuple of integer keys,
``SeedSequence(seed, spawn_key=keys)``, and drives a PCG64 generator. Two calls
with the same (seed, keys) produce identical streams; distinct key tuples give
statistically independent streams. Sweeps use ``keys=(point_index,)``, replica
``r`` of a sampler run uses ``keys=(r,)``.
"""

import numpy as np


def stream(seed, *keys):
    """Return a ``numpy.random.Generator`` for the stream ``(seed, keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def child_seeds(seed, n, *keys):
    """Derive ``n`` independent 63-bit integer seeds below ``(seed, keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return [int(s.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for s in ss.spawn(n)]
