import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Counter-based generator for a seed, optionally split into an
    independent stream identified by extra integers.
    """
    if stream:
        sequence = np.random.SeedSequence([seed, *stream])
        return np.random.Generator(np.random.Philox(sequence))
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])
