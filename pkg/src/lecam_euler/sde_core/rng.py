"""Counter-based random streams.

Every stream is a Philox generator whose key is derived from a master seed
and an integer index path, e.g. ``(seed, cell, purpose, replicate)``. Streams
for different replicates never depend on the order in which they are drawn,
so replicate batches can be split across workers freely.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

# purpose tags, the second-to-last component of an index path
BROWNIAN = 0
EULER_NOISE = 1
BRIDGE_INFILL = 2
REFINEMENT = 3
INITIAL_STATE = 4
UNIT_DRIVER = 5

SEED_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed: int, *index: int) -> np.random.Generator:
    """Return the generator for ``(seed, *index)``."""
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng: np.random.Generator | int | Sequence[int]) -> np.random.Generator:
    """Accept a generator, a bare seed, or a ``(seed, *index)`` tuple."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return stream(int(rng))
    seed, *index = rng
    return stream(seed, *index)


def replicate_normals(
    seed: int, prefix: Sequence[int], replicates: Iterable[int], size: int
) -> np.ndarray:
    """Stack ``size`` standard normals from each replicate stream ``(seed, *prefix, r)``."""
    rows = [stream(seed, *prefix, r).standard_normal(size) for r in replicates]
    if not rows:
        return np.empty((0, size))
    return np.vstack(rows)
