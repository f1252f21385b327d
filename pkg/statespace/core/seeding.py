import numpy as np

from statespace.core.config import settings


def make_rng(seed: int | None = None, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional stream path.

    ``make_rng(7, 3)`` and ``make_rng(7, 4)`` are independent streams derived
    from the same root seed through ``SeedSequence``; the fixture format of the
    command surface documents PCG64 so loops reproduce across runs.
    """
    root = settings.SEED if seed is None else seed
    sequence = np.random.SeedSequence([int(root) & (2**64 - 1), *map(int, stream)])
    return np.random.Generator(np.random.PCG64(sequence))
