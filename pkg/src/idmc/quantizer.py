"""Clip-round-rescale quantizer with a trainable step (regular constellations).

Forward::

    q(s) = round(clip(s / d, b_neg, b_pos)) * d

Rounding is half-away-from-zero.  The backward pass copies the incoming
gradient to ``s`` inside the clip range (boundaries included) and uses the
scaled modulation error for ``d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UniformQuantizer:
    d: float
    b_neg: int
    b_pos: int

    def __post_init__(self):
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValueError(f"distance must be positive and finite, got {self.d}")
        if self.b_neg >= self.b_pos:
            raise ValueError(f"need b_neg < b_pos, got ({self.b_neg}, {self.b_pos})")

    @property
    def levels(self) -> int:
        return self.b_pos - self.b_neg + 1

    def codes(self) -> np.ndarray:
        """Per-axis integer code set."""
        return np.arange(self.b_neg, self.b_pos + 1)

    def with_distance(self, d: float) -> "UniformQuantizer":
        return UniformQuantizer(float(d), self.b_neg, self.b_pos)


def round_half_away(u):
    return np.sign(u) * np.floor(np.abs(u) + 0.5)


def quantize(s, q: UniformQuantizer):
    """Map ``s`` (scalar or array) onto ``{b_neg*d, ..., b_pos*d}``."""
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise ValueError("quantize input must be finite")
    out = round_half_away(np.clip(s / q.d, q.b_neg, q.b_pos)) * q.d
    return out if out.ndim else float(out)


def quantize_codes(s, q: UniformQuantizer) -> np.ndarray:
    """Integer codes of ``quantize(s, q)``."""
    s = np.asarray(s, dtype=np.float64)
    return round_half_away(np.clip(s / q.d, q.b_neg, q.b_pos)).astype(np.int64)


def grad_wrt_distance(s, q: UniformQuantizer):
    """d(quantize)/dd: round(u) - u inside (b_neg, b_pos), clip(u) outside."""
    s = np.asarray(s, dtype=np.float64)
    u = s / q.d
    inside = (u > q.b_neg) & (u < q.b_pos)
    out = np.where(inside, round_half_away(u) - u, np.clip(u, q.b_neg, q.b_pos))
    return out if out.ndim else float(out)


def grad_wrt_input(s, q: UniformQuantizer):
    """Straight-through factor: 1 on [b_neg, b_pos] (closed), else 0."""
    u = np.asarray(s, dtype=np.float64) / q.d
    out = ((u >= q.b_neg) & (u <= q.b_pos)).astype(np.float64)
    return out if out.ndim else float(out)


def grid_for_order(order: int) -> tuple[int, int]:
    """Clip bounds for square QAM of the given order: L = sqrt(M) codes per axis."""
    levels = math.isqrt(int(order))
    if order < 4 or levels * levels != order:
        raise ValueError(f"modulation order must be a perfect square >= 4, got {order}")
    return -(levels // 2), (levels + 1) // 2 - 1


def initial_distance(symbols, b_pos: int) -> float:
    """Step initialisation 2*E|s|/sqrt(b_pos) from a calibration batch.

    ``symbols`` are the real I/Q components.  For 4-QAM ``b_pos`` is 0, so the
    divisor is floored at 1.
    """
    s = np.abs(np.asarray(symbols, dtype=np.float64))
    return float(2.0 * s.mean() / math.sqrt(max(b_pos, 1)))
