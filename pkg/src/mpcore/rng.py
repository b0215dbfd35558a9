"""Seeded random streams.

Every randomised routine draws from a Philox counter-based generator keyed by
the user seed (low 64 bits) and a fixed stream offset (high 64 bits), so the
noise layer of a run never shares a stream with, say, its random start vectors.
"""

import numpy as np

# fixed sub-stream offsets
NOISE_STREAM = 1
SBM_STREAM = 2
START_STREAM = 3

_MASK64 = (1 << 64) - 1


def make_rng(seed, stream=0):
    """Return a ``numpy.random.Generator`` for ``(seed, stream)``."""
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = (seed & _MASK64) | ((int(stream) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))
