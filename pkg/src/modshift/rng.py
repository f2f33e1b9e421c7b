"""Counter-style derivation of independent random streams from one master seed.

Every random draw in a simulation is keyed by ``(label, round, agent)`` so the
realization does not depend on evaluation order or parallelism.
"""

import numpy as np

# Stable integer ids; changing these changes every recorded trace.
DATA = 0
BOB = 1
EVE = 2
INJECT = 3
GAMMA = 4
PROBE = 5

_LABELS = {"data": DATA, "bob": BOB, "eve": EVE, "inject": INJECT, "gamma": GAMMA, "probe": PROBE}


def derive_stream(master_seed: int, label, round: int = 0, agent: int = 0) -> np.random.Generator:
    """Return the generator for one (label, round, agent) cell."""
    if isinstance(label, str):
        label = _LABELS[label]
    if master_seed < 0 or round < 0 or agent < 0:
        raise ValueError("seed, round and agent must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(label), int(round), int(agent)))
    return np.random.Generator(np.random.PCG64(seq))
