"""Counter-based seed derivation for reproducible, order-free Monte-Carlo."""

from __future__ import annotations

import numpy as np

TRUTH = 0
CLASSICAL = 1
QUANTUM = 2
QUANTUM_B = 3
SINGLE_SHOT = 4


def run_seed(master_seed: int, run_index: int) -> int:
    """64-bit seed of run ``run_index``; depends only on the two integers."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(run_index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream_id,))))
