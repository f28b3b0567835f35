"""Counter-based random streams.

Every consumer derives its own Philox generator from a tuple of integers
(purpose tag, seed, counters...), so results never depend on evaluation order
or on how work is split between processes.
"""
import numpy as np

STREAM_ES = 0
STREAM_NEIGHBORHOOD = 1
STREAM_DTYPE = 2
STREAM_HARNESS = 3


def stream(*words: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(w) % 2**64 for w in words])))
