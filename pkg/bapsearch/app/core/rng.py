"""Seed handling.

Every stochastic routine takes an explicit ``numpy.random.Generator``. Streams are split
with ``SeedSequence.spawn`` so that child ``k`` of a parent seed is the same no matter how
work is scheduled:

- simulation replicate ``r`` uses child ``r`` of the master seed;
- inside a replicate, children 0..3 drive graph sampling, parameter sampling, data
  sampling and the structure search;
- restart ``k`` of a search uses child ``k`` of the search stream.
"""
from __future__ import annotations

from typing import List, Optional

import numpy as np

SeedLike = Optional[int | np.random.SeedSequence]


def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    # Fresh copy: spawn() advances a counter on the object it is called on.
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key, pool_size=seed.pool_size)
    return np.random.SeedSequence(seed)


def spawn(seed: SeedLike, count: int) -> List[np.random.SeedSequence]:
    return seed_sequence(seed).spawn(count)


def generator(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed))
