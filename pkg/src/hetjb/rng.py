"""Counter-based random streams.

All randomness goes through :func:`make_rng`, a Philox generator seeded from a
64-bit integer.  Child seeds are a pure function of a master seed and an integer
key path, obtained from ``numpy.random.SeedSequence(master, spawn_key=keys)``.
Streams therefore never depend on worker count or scheduling order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed, *keys):
    """Return the 64-bit child seed for ``keys`` under ``master_seed``."""
    if master_seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seeds and keys must be nonnegative integers")
    ss = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & _MASK64))
