"""
Keyed random streams for the virtual experiment.

Each stream is derived from the master seed and a key (purpose, l, index),
never from a shared sequential generator, so results do not depend on the
order or the thread in which points are evaluated.
"""

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    COUNTS = 1
    RESAMPLE = 2


def l_key(l: float) -> int:
    """Bit pattern of ``l`` as a float64, so keys are exact for any grid value"""
    return int(np.float64(l).view(np.uint64))


class KeyedRNG:
    """Factory of independent Philox generators keyed by (purpose, l, index)"""

    def __init__(self, master_seed: int):
        if master_seed < 0 or master_seed >= 2**64:
            raise ValueError("master seed must fit in 64 unsigned bits")
        self.master_seed = int(master_seed)

    def generator(self, purpose: Purpose, l: float, index: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(int(purpose), l_key(l), int(index))
        )
        return np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"KeyedRNG(master_seed={self.master_seed})"
