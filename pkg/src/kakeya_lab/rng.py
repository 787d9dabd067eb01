"""Seeded randomness.  Everything random in the package flows through here."""

from __future__ import annotations

import numpy as np

PRNG_NAME = "numpy.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


class RandRange:
    """``random.Random``-style ``randrange`` on top of a numpy generator."""

    def __init__(self, gen: np.random.Generator):
        self.gen = gen

    def randrange(self, stop: int) -> int:
        return int(self.gen.integers(stop))
