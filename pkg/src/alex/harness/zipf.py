"""Zipfian rank sampler (the YCSB generator, vectorised)."""

from __future__ import annotations

import numpy as np


def zeta(n: int, theta: float) -> float:
    return float(np.sum(np.arange(1, n + 1, dtype=np.float64) ** -theta))


class ZipfGenerator:
    """Ranks in [0, n) with P(rank) proportional to 1/(rank+1)**theta.

    The YCSB closed form is exact for ranks 0 and 1 and approximates the tail.
    theta=0 is uniform.
    """

    def __init__(self, n: int, theta: float = 0.99, seed=None):
        if n < 1:
            raise ValueError("n must be positive")
        if not 0 <= theta < 1:
            raise ValueError("theta must lie in [0, 1)")
        self.n = n
        self.theta = theta
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.zetan = zeta(n, theta)
        self.alpha = 1.0 / (1.0 - theta)
        zeta2 = 1.0 + 0.5 ** theta
        self.eta = 1.0 if n <= 2 else (1.0 - (2.0 / n) ** (1.0 - theta)) / (1.0 - zeta2 / self.zetan)

    def ranks(self, count: int) -> np.ndarray:
        u = self.rng.random(count)
        uz = u * self.zetan
        tail = (self.n * (self.eta * u - self.eta + 1.0) ** self.alpha).astype(np.int64)
        out = np.where(uz < 1.0, 0, np.where(uz < 1.0 + 0.5 ** self.theta, 1, tail))
        return np.clip(out, 0, self.n - 1)

    def pick(self) -> int:
        return int(self.ranks(1)[0])


def zipf_pick(n: int, theta: float, rng) -> int:
    return ZipfGenerator(n, theta, rng).pick()
