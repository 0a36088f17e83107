"""Deterministic seed derivation and random stream construction.

All randomness in the package flows through 64-bit PCG64 generators.
Instance construction derives one base seed per (function, instance)
pair and splits it into fixed per-purpose streams, so any single draw
is reproducible in isolation.
"""

import numpy as np

# offsets of the per-purpose streams relative to the base instance seed
STREAM_XOPT = 0
STREAM_FOPT = 1
STREAM_ROT_R = 2
STREAM_ROT_Q = 3
STREAM_PARAMS = 4


def derive_seed(fid: int, iid: int) -> int:
    """Base seed of instance ``iid`` of function ``fid``.

    Injective over fid in [1, 24] and iid >= 1.
    """
    if not isinstance(fid, (int, np.integer)) or not isinstance(iid, (int, np.integer)):
        raise TypeError("fid and iid must be integers")
    if not 1 <= fid <= 24:
        raise ValueError(f"fid must be in [1, 24], got {fid}")
    if iid < 1:
        raise ValueError(f"iid must be >= 1, got {iid}")
    return int(fid) + 10000 * int(iid)


def stream(seed: int, offset: int = 0) -> np.random.Generator:
    """Generator for the stream at ``seed + offset``."""
    return np.random.Generator(np.random.PCG64(int(seed) + int(offset)))


def run_seed(base_seed: int, *components: int) -> int:
    """Collapse (base_seed, components...) into a single 64-bit seed.

    Used by the run harness so that any (algorithm, fid, iid, run) cell
    of a sweep can be reproduced without executing the rest.
    """
    ss = np.random.SeedSequence([int(base_seed), *[int(c) for c in components]])
    return int(ss.generate_state(1, np.uint64)[0])
