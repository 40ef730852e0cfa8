"""Splittable seed derivation.

Every random stream in lagwurm is keyed by a tuple of non-negative
integers, so results do not depend on the order or the process in which
work is executed."""

import numpy as np


def derive_seed(*keys) -> int:
    """Return a 32-bit seed derived from the integer *keys*."""
    return int(np.random.SeedSequence([int(k) for k in keys])
               .generate_state(1)[0])


def derive_rng(*keys) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(
        [int(k) for k in keys]))


def node_keys(node):
    """Integer key of a lagged variable, ``0`` standing for none."""
    if node is None:
        return (0, 0)
    return (node.var + 1, node.lag + 1)
