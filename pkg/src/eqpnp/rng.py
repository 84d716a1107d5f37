"""Deterministic, splittable random streams.

All randomness in an experiment flows from a single 64-bit root seed.
Independent consumers (measurement noise, masks, per-iteration group
sampling, Langevin noise) each get their own child stream via
:meth:`SeededRng.derive`, so changing how many draws one consumer makes can
never perturb the others.

The generator is ``numpy``'s PCG64; child seeds are the first 8 bytes of
``blake2b("<seed>/<label>")``, which depends only on the parent seed and the
label, never on how many draws the parent has made.
"""

import hashlib

import numpy as np

__all__ = ["SeededRng"]


class SeededRng:
    """Seeded PCG64 stream with labeled child-stream derivation."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.gen = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, label: str) -> "SeededRng":
        """Child stream determined by ``(seed, label)`` alone."""
        digest = hashlib.blake2b(f"{self.seed}/{label}".encode(), digest_size=8).digest()
        return SeededRng(int.from_bytes(digest, "little"))

    def integers(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        return int(self.gen.integers(n))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def standard_normal(self, size=None):
        return self.gen.standard_normal(size)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed})"
