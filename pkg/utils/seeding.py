"""Reproducible per-trial random streams"""

import numpy as np


def trial_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Stable hash of (master_seed, keys...) as a SeedSequence"""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.SeedSequence(entropy)


def trial_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(master_seed, *keys))
