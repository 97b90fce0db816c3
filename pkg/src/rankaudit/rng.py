"""Counter-based random streams.

Every stream is a Philox generator whose 128-bit key is derived from
``(seed, *key)`` with ``SeedSequence``. A given key always yields the same
draws, so results do not depend on evaluation order or on how work is
split between processes.
"""

import numpy as np

# Domain tags keep the substreams of different consumers disjoint.
SIMULATION = 1
MONTE_CARLO = 2
REPLICATION = 3


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2, np.uint64)))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit integer seed for the child keyed by ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
