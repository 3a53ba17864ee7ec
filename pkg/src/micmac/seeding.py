"""Counter-based seed expansion.

Every random stream in a run is addressed by the root seed plus a tuple of
integer counters (repeat, fold, tree, ...), so results do not depend on the
order in which jobs execute.
"""

import numpy as np


def derive_seed(root: int, *counters: int) -> int:
    ss = np.random.SeedSequence(int(root) & (2**64 - 1), spawn_key=tuple(int(c) for c in counters))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def rng_for(root: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(root) & (2**64 - 1), spawn_key=tuple(int(c) for c in counters)))
