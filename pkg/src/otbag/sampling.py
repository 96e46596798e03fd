"""Poisson(1) resampling counts and the binomial distribution they approximate.

Training code only needs an object with a ``poisson1()`` method, so tests can
substitute :class:`FixedDraws` or :class:`ScriptedDraws` for a seeded source.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .errors import BadSupport

_EXP_MINUS_ONE = math.exp(-1.0)


class SeededRng:
    """Deterministic uniform stream (PCG64) with a Knuth Poisson(1) sampler.

    Uniforms are pulled from the generator in fixed-size blocks; numpy
    guarantees a block of ``n`` doubles equals ``n`` single draws, so the
    sequence depends on the seed alone.
    """

    _BLOCK = 4096

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self._buf: list[float] = []
        self._pos = 0

    def uniform(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(self._BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def poisson1(self) -> int:
        # multiply uniforms until the running product drops to e^-1 or below
        k = 0
        p = self.uniform()
        while p > _EXP_MINUS_ONE:
            k += 1
            p *= self.uniform()
        return k


class FixedDraws:
    """Draw source returning the same count every time."""

    def __init__(self, k: int):
        self.k = int(k)
        self.calls = 0

    def poisson1(self) -> int:
        self.calls += 1
        return self.k


class ScriptedDraws:
    """Draw source replaying a fixed sequence of counts."""

    def __init__(self, counts: Iterable[int]):
        self.counts = [int(k) for k in counts]
        self.calls = 0

    def poisson1(self) -> int:
        if self.calls >= len(self.counts):
            raise IndexError("scripted draws exhausted")
        k = self.counts[self.calls]
        self.calls += 1
        return k


def poisson1_draw(rng) -> int:
    return rng.poisson1()


def poisson1_pmf(k: int) -> float:
    if k < 0:
        raise BadSupport(f"k must be >= 0, got {k}")
    return math.exp(-1.0 - math.lgamma(k + 1))


def binomial_pmf(n: int, k: int) -> float:
    """P(K = k) for K ~ Binomial(n, 1/n), evaluated in log space."""
    if n < 1:
        raise BadSupport(f"n must be >= 1, got {n}")
    if k < 0 or k > n:
        raise BadSupport(f"k must lie in [0, {n}], got {k}")
    if n == 1:
        return 1.0 if k == 1 else 0.0
    # sum of log((n - j + i) / i) avoids the cancellation lgamma suffers at large n
    j = min(k, n - k)
    log_choose = math.fsum(math.log((n - j + i) / i) for i in range(1, j + 1))
    return math.exp(log_choose - k * math.log(n) + (n - k) * math.log1p(-1.0 / n))
