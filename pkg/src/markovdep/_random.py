"""Seed handling.

Every sampler takes an explicit seed.  Per-task streams are derived with
:class:`numpy.random.SeedSequence` using ``spawn_key``: the stream for
``(master_seed, *keys)`` is ``SeedSequence(master_seed, spawn_key=keys)``.
The derived stream depends only on the master seed and the keys, so a task
produces the same numbers whether it runs alone, in a larger batch, or in
another process.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed) -> np.random.Generator:
    if seed is None:
        raise TypeError("an explicit seed is required")
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.default_rng(int(seed))


def derive_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Child seed for the stream identified by ``keys`` under ``master_seed``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
