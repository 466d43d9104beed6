"""Deterministic random state built on the counter-based Philox generator.

Every stochastic component in the package draws from an RngState. Identical
seed plus identical call sequence yields identical draws on every platform,
which is what makes training trajectories and output files reproducible.
Independent streams (per fold, per subsystem) are derived with ``split``,
which keys a fresh Philox stream off the parent seed and the split path, so
parallel consumers never share or race a stream.
"""

from __future__ import annotations

import numpy as np


class RngState:
    """Seeded, splittable random stream."""

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def split(self, index: int) -> "RngState":
        """Derive an independent child stream; same (seed, path) -> same stream."""
        return RngState(self.seed, self.path + (int(index),))

    # Thin pass-throughs so call sites read naturally.
    def uniform(self, low: float, high: float, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low: int, high: int, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, seq, size=None, replace=True):
        return self.generator.choice(seq, size=size, replace=replace)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngState(seed={self.seed}, path={self.path})"
