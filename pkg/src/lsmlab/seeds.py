"""Deterministic derivation of per-stage random streams from one master seed.

Every randomized stage of an experiment (topology, weights, leaks, encoding,
reset draws, fold assignment, readout init, ...) gets its own stream, keyed
by a stage tag plus optional integer indices (trial number, w-grid index).
Streams are independent: changing what one stage consumes never shifts the
draws seen by another stage.
"""

from __future__ import annotations

import numpy as np

# Stage tags. Values are part of the reproducibility contract: changing them
# changes every derived stream.
TOPOLOGY = 1
WEIGHTS = 2
LEAKS = 3
ENCODING = 4
RESET = 5
FOLDS = 6
READOUT = 7
NEURON_ROLES = 8
DATASET = 9
TRIAL = 10


def seed_for(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Derive the SeedSequence for one (stage, indices...) slot."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def rng_for(master_seed: int, *key: int) -> np.random.Generator:
    """Generator bound to the stream of one (stage, indices...) slot."""
    return np.random.default_rng(seed_for(master_seed, *key))
