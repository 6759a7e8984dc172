"""Seeded counter-based randomness (Philox 4x64).

Every stochastic choice in the package is derived from a user seed plus a
small integer naming the purpose (``stream``), so unrelated consumers never
share a sequence.
"""

import numpy as np

MASK64 = (1 << 64) - 1

# stream identifiers
GRAPHS = 1
SCHEDULE = 2
INIT = 3
PROBLEM = 4
PROBES = 5
SAMPLES = 6


def generator(seed, stream=0):
    """A fresh ``numpy.random.Generator`` keyed by ``(seed, stream)``."""
    key = (int(seed) & MASK64) | ((int(stream) & MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def draw(seed, stream, counter):
    """One uint64 that is a pure function of ``(seed, stream, counter)``."""
    key = (int(seed) & MASK64) | ((int(stream) & MASK64) << 64)
    bitgen = np.random.Philox(key=key, counter=int(counter) & MASK64)
    return int(bitgen.random_raw())
