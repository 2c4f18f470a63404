"""Seeded random streams."""

from typing import List, Optional, Sequence

import numpy as np

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"


def make_rng(seed: int, spawn_key: Optional[Sequence[int]] = None) -> np.random.Generator:
    """Generator for a root seed, optionally on a derived stream."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(spawn_key or ()))
    return np.random.Generator(np.random.PCG64(sequence))


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent streams indexed 0..count-1 (one per chain or replicate)."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(count)]
