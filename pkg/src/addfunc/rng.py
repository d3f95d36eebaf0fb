"""Counter-based random streams keyed by (seed, index, ...).

Every Monte Carlo draw comes from a Philox generator whose key is derived
from the integer tuple, so replication ``r`` sees the same numbers no matter
which thread runs it or in what order.
"""

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derived_seed(seed: int, *keys: int) -> int:
    """A plain 63-bit integer seed for APIs that take ``seed: int``."""
    state = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)]).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))
