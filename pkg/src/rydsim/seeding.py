"""Deterministic seed derivation.

All stochastic components draw from counter-based Philox generators keyed by
a master seed plus an integer path.  Children are derived with
``numpy.random.SeedSequence(entropy=master, spawn_key=path)``, so adding scan
axes or extending a scan never perturbs the streams of existing work items.
"""

from __future__ import annotations

import numpy as np

# Fixed purpose codes used as the first path element by the orchestrator.
PURPOSE_POSITIONS = 1
PURPOSE_EVOLVE = 2
PURPOSE_SAMPLING = 3
PURPOSE_DETECTION = 4
PURPOSE_MC = 5


def seed_sequence(master: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(path))


def rng_from(master: int, *path: int) -> np.random.Generator:
    """Philox generator for (master, *path); bit-stable across platforms."""
    return np.random.Generator(np.random.Philox(seed_sequence(master, *path)))


def rng(seed) -> np.random.Generator:
    """Philox generator from a plain seed or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
