"""Splittable deterministic sub-seeds.

Every randomized stage (subsampling, per-repetition orderings, per-criterion
ordering averages) draws its own child seed from the master seed and an
integer path, so any stage can be replayed in isolation.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(master: int, *path: int) -> int:
    """Derive a deterministic 64-bit child seed from ``master`` and a path."""
    entropy = [int(master) & _MASK64] + [int(p) & _MASK64 for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
