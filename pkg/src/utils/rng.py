"""Counter-based random streams.

Every stream is a Philox generator keyed by the study seed plus a tuple of
non-negative integers (trajectory index, N index, replicate, ...). Streams
with different keys are independent and never depend on execution order.
"""

from typing import Sequence

import numpy as np


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Create the generator for ``(seed, *keys)``.

    Args:
        seed: Study-level 64-bit seed
        *keys: Stream coordinates, e.g. trajectory index

    Returns:
        Independent ``numpy.random.Generator``
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, keys: Sequence[int]) -> int:
    """Derive a 63-bit integer seed for a sub-task (e.g. a study cell)."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
