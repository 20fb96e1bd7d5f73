"""Power normalisation, modulation, AWGN channel and demodulation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import clustering, quantizer
from .clustering import Constellation
from .core import Rng, average_power, complex_vec, sample_complex_gaussian
from .quantizer import UniformQuantizer


@dataclass(frozen=True)
class ChannelConfig:
    """AWGN channel at ``snr_db`` under unit average signal power.

    ``snr_db=None`` is the noiseless sentinel.
    """

    snr_db: float | None

    def __post_init__(self):
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError("use ChannelConfig.noiseless() instead of an infinite SNR")

    @classmethod
    def noiseless(cls) -> "ChannelConfig":
        return cls(None)

    @property
    def is_noiseless(self) -> bool:
        return self.snr_db is None

    @property
    def noise_variance(self) -> float:
        if self.snr_db is None:
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True, eq=False)
class Modem:
    """Nearest-point modulator/demodulator over a shared constellation.

    Regular mode never materialises the L x L grid: each axis is quantized
    separately.  Irregular mode searches the constellation exhaustively.
    """

    mode: str
    quantizer: UniformQuantizer | None = None
    constellation: Constellation | None = None

    def __post_init__(self):
        if self.mode == "regular" and self.quantizer is None:
            raise ValueError("regular modem needs a quantizer")
        if self.mode == "irregular" and self.constellation is None:
            raise ValueError("irregular modem needs a constellation")
        if self.mode not in ("regular", "irregular"):
            raise ValueError(f"unknown modem mode {self.mode!r}")

    @classmethod
    def regular(cls, q: UniformQuantizer) -> "Modem":
        return cls("regular", quantizer=q)

    @classmethod
    def irregular(cls, c: Constellation) -> "Modem":
        return cls("irregular", constellation=c)

    @property
    def order(self) -> int:
        if self.mode == "regular":
            return self.quantizer.levels**2
        return self.constellation.order

    def points(self) -> np.ndarray:
        """All constellation points, in symbol-index order."""
        if self.mode == "irregular":
            return self.constellation.points
        lv = self.quantizer.codes() * self.quantizer.d
        return (lv[:, None] + 1j * lv[None, :]).ravel()

    def minimum_distance(self) -> float:
        if self.mode == "regular":
            return self.quantizer.d
        return self.constellation.minimum_distance()

    def nearest(self, symbols) -> np.ndarray:
        y = np.asarray(symbols, dtype=np.complex128)
        if self.mode == "regular":
            q = self.quantizer
            re = quantizer.quantize(np.atleast_1d(y.real), q)
            im = quantizer.quantize(np.atleast_1d(y.imag), q)
            return (re + 1j * im).reshape(y.shape)
        return self.constellation.points[clustering.assign(y, self.constellation)]

    def indices(self, symbols) -> np.ndarray:
        """Constellation index of the nearest point, matching :meth:`points`."""
        y = np.asarray(symbols, dtype=np.complex128)
        if self.mode == "regular":
            q = self.quantizer
            ci = quantizer.quantize_codes(y.real, q) - q.b_neg
            cq = quantizer.quantize_codes(y.imag, q) - q.b_neg
            return ci * q.levels + cq
        return clustering.assign(y, self.constellation)


def normalize_power(y) -> np.ndarray:
    """Scale ``y`` to unit average power.  Batched input (B, k) is normalised per row."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim <= 1:
        p = average_power(y)
        if p == 0:
            raise ValueError("cannot normalise an all-zero block")
        return complex_vec(y / math.sqrt(p))
    p = np.mean(y.real**2 + y.imag**2, axis=-1, keepdims=True)
    if np.any(p == 0):
        raise ValueError("cannot normalise an all-zero block")
    return complex_vec(y / np.sqrt(p))


def modulate(y, modem: Modem) -> np.ndarray:
    return complex_vec(modem.nearest(y))


def demodulate(z_hat, modem: Modem) -> np.ndarray:
    return complex_vec(modem.nearest(z_hat))


def channel_noise(shape, ch: ChannelConfig, rng: Rng) -> np.ndarray:
    """CN(0, sigma^2) samples of the given shape, or zeros when noiseless."""
    shape = (int(shape),) if np.ndim(shape) == 0 else tuple(shape)
    if ch.is_noiseless:
        return np.zeros(shape, dtype=np.complex128)
    size = int(np.prod(shape))
    return np.asarray(sample_complex_gaussian(rng, size, ch.noise_variance)).reshape(shape)


def transmit(z, ch: ChannelConfig, rng: Rng) -> np.ndarray:
    """z + n with n ~ CN(0, sigma^2 I).  The noiseless sentinel returns z untouched."""
    z = np.asarray(z, dtype=np.complex128)
    if ch.is_noiseless:
        return complex_vec(z)
    return complex_vec(z + channel_noise(z.shape, ch, rng))


TRACE_HEADER = ["index", "y_re", "y_im", "z_re", "z_im", "zhat_re", "zhat_im", "yhat_re", "yhat_im"]


def trace_csv(y, z, z_hat, y_hat) -> str:
    """Per-symbol debug trace of one transmitted block."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    cols = [np.asarray(a, dtype=np.complex128).ravel() for a in (y, z, z_hat, y_hat)]
    for i, vals in enumerate(zip(*cols)):
        row = [i]
        for v in vals:
            row += [repr(float(v.real)), repr(float(v.imag))]
        w.writerow(row)
    return buf.getvalue()
