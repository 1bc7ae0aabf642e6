"""Deterministic random streams derived from a single root seed."""
import zlib

import numpy as np


def derive_seed(root: int, purpose: str, index: int = 0) -> np.random.SeedSequence:
    """Stable seed sequence for (root, purpose, index); independent of process and run order."""
    return np.random.SeedSequence([int(root), zlib.crc32(purpose.encode("utf-8")), int(index)])


def derive_rng(root: int, purpose: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, purpose, index))


def split(rng: np.random.Generator, count: int) -> list:
    """Child generators drawn from a parent stream."""
    return [np.random.default_rng(int(s)) for s in rng.integers(0, 2 ** 63, size=count)]
