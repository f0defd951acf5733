"""Deterministic seed derivation.

All randomness in the toolkit flows through numpy SeedSequence streams keyed
by integer paths, so every (user, repeat, round) combination is reproducible
independently of execution order and of PYTHONHASHSEED.
"""

from __future__ import annotations

import numpy as np

# stream purpose tags
GENUINE_ASSIGNMENT = 0
FORGERY_ASSIGNMENT = 1
NEGATIVE_SUBSET = 2
LOOP_ROUND = 3


def derive_rng(*path: int) -> np.random.Generator:
    """RNG for an integer key path, e.g. derive_rng(seed, user, tag)."""
    if any(p < 0 for p in path):
        raise ValueError(f"seed path must be non-negative, got {path}")
    return np.random.default_rng(np.random.SeedSequence(list(path)))


def derive_seed(*path: int) -> int:
    """Collapse a key path to a single reusable integer seed."""
    if any(p < 0 for p in path):
        raise ValueError(f"seed path must be non-negative, got {path}")
    return int(np.random.SeedSequence(list(path)).generate_state(1)[0])
