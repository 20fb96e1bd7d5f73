"""Seeded random streams, complex symbol vectors and Gaussian sampling.

Random numbers come from numpy's Philox4x64 counter-based generator keyed by
``(seed, stream_id)``.  The key fully determines the sequence, so two
instances with equal keys produce identical draws on every platform, and
distinct stream ids select non-overlapping keyspaces.
"""
from __future__ import annotations

import enum

import numpy as np

_U64 = (1 << 64) - 1


class Stream(enum.IntEnum):
    """Well-known stream ids.  Phases offset these by ``16 * phase``."""

    INIT = 0
    SHUFFLE = 1
    NOISE = 2
    SNR = 3
    CLUSTER = 4
    DATA = 5
    EVAL = 6


class Rng:
    """Reproducible random stream.

    Not safe to share between workers; give every worker its own
    ``stream_id`` instead.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed <= _U64 and 0 <= stream_id <= _U64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._gen = np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream_id={self.stream_id})"

    def substream(self, offset: int) -> "Rng":
        """A fresh, independent stream derived from this one's key."""
        return Rng(self.seed, (self.stream_id + 1 + int(offset)) & _U64)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)


def complex_vec(values) -> np.ndarray:
    """Immutable complex128 copy of ``values`` (a 1-D or batched symbol vector)."""
    out = np.array(values, dtype=np.complex128)
    out.setflags(write=False)
    return out


def reals_to_complex(reals: np.ndarray) -> np.ndarray:
    """Pair a trailing axis of 2k reals as (re0, im0, re1, im1, ...) into k symbols."""
    reals = np.ascontiguousarray(reals, dtype=np.float64)
    if reals.shape[-1] % 2:
        raise ValueError(f"trailing axis must be even, got {reals.shape[-1]}")
    return reals.view(np.complex128)


def complex_to_reals(symbols: np.ndarray) -> np.ndarray:
    """Inverse of :func:`reals_to_complex`."""
    return np.ascontiguousarray(symbols, dtype=np.complex128).view(np.float64)


def average_power(v) -> float:
    """(1/k) * sum |v_i|^2, accumulated in float64."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size == 0:
        raise ValueError("average_power of an empty vector")
    return float(np.mean(v.real**2 + v.imag**2))


def sample_complex_gaussian(rng: Rng, k: int, variance: float) -> np.ndarray:
    """k draws from CN(0, variance); real and imaginary parts each get variance/2."""
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    parts = rng.normal((int(k), 2)) * np.sqrt(variance / 2.0)
    return complex_vec(parts[:, 0] + 1j * parts[:, 1])
