"""PSNR, modulation error and symbol-distribution statistics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autonet.network import ImageTensor
from .clustering import atomic_write_text

SWEEP_HEADER = ["snr_db", "psnr_db", "mse", "mode", "order", "cbr", "seed"]


def psnr_from_mse(mse: float, max_value: float) -> float:
    """10 log10(MAX^2 / MSE); zero MSE gives +inf."""
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse)


def psnr(x, x_hat, bit_depth: int | None = None) -> float:
    """PSNR of ``x_hat`` against ``x`` on the denormalised integer pixel scale.

    Accepts :class:`ImageTensor` pairs (bit depth from metadata) or [0, 1]
    arrays together with ``bit_depth``.
    """
    if isinstance(x, ImageTensor):
        bit_depth = x.bit_depth if bit_depth is None else bit_depth
        x = x.pixels
    if isinstance(x_hat, ImageTensor):
        x_hat = x_hat.pixels
    if bit_depth is None:
        raise ValueError("bit depth is required for PSNR")
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_hat, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    peak = float(2**bit_depth - 1)
    err = (a - b) * peak
    return psnr_from_mse(float(np.mean(err * err)), peak)


def modulation_error_stats(y, z) -> float:
    """RMS distance between continuous symbols and their modulated points."""
    y = np.asarray(y, dtype=np.complex128).ravel()
    z = np.asarray(z, dtype=np.complex128).ravel()
    if y.shape != z.shape:
        raise ValueError(f"length mismatch: {y.size} vs {z.size}")
    if y.size == 0:
        raise ValueError("empty symbol vectors")
    diff = y - z
    return math.sqrt(float(np.mean(diff.real**2 + diff.imag**2)))


@dataclass
class SymbolDistribution:
    """Square 2-D (I, Q) histogram plus marginal densities."""

    counts: np.ndarray  # (bins_i, bins_q)
    edges: np.ndarray  # shared I and Q bin edges
    inphase_density: np.ndarray
    quadrature_density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def center_bin(self) -> int:
        ctr = self.counts.shape[0] // 2
        return int(self.counts[ctr, ctr])

    def edge_bins(self) -> np.ndarray:
        c = self.counts
        return np.concatenate([c[0, :], c[-1, :], c[1:-1, 0], c[1:-1, -1]])

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_i", "bin_q", "count"])
        for i in range(self.counts.shape[0]):
            for q in range(self.counts.shape[1]):
                w.writerow([i, q, int(self.counts[i, q])])
        return buf.getvalue()

    def marginal_csv(self, axis: str) -> str:
        dens = self.inphase_density if axis == "inphase" else self.quadrature_density
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin", "center", "density"])
        for i, (c, d) in enumerate(zip(self.centers, dens)):
            w.writerow([i, repr(float(c)), repr(float(d))])
        return buf.getvalue()

    def write(self, path) -> list[Path]:
        """Write ``path`` plus ``<stem>_inphase.csv`` and ``<stem>_quadrature.csv``."""
        path = Path(path)
        paths = [path, path.with_name(f"{path.stem}_inphase.csv"), path.with_name(f"{path.stem}_quadrature.csv")]
        atomic_write_text(paths[0], self.histogram_csv())
        atomic_write_text(paths[1], self.marginal_csv("inphase"))
        atomic_write_text(paths[2], self.marginal_csv("quadrature"))
        return paths


def export_symbol_distribution(samples, bins: int = 31, extent: float | None = None) -> SymbolDistribution:
    """Histogram the I/Q plane over [-extent, extent] (default: max |I|, |Q|).

    Samples outside the extent land in the outermost bins so counts are
    conserved.
    """
    s = np.asarray(samples, dtype=np.complex128).ravel()
    if s.size == 0:
        raise ValueError("no samples to histogram")
    if bins < 1:
        raise ValueError("bins must be positive")
    if extent is None:
        extent = float(max(np.abs(s.real).max(), np.abs(s.imag).max()))
    if extent <= 0:
        extent = 1.0
    edges = np.linspace(-extent, extent, bins + 1)
    ii = np.clip(np.searchsorted(edges, s.real, side="right") - 1, 0, bins - 1)
    qq = np.clip(np.searchsorted(edges, s.imag, side="right") - 1, 0, bins - 1)
    counts = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(counts, (ii, qq), 1)
    width = edges[1] - edges[0]
    inphase = counts.sum(axis=1) / (s.size * width)
    quadrature = counts.sum(axis=0) / (s.size * width)
    return SymbolDistribution(counts, edges, inphase, quadrature)


@dataclass
class SnrPoint:
    snr_db: float | None  # None: noiseless
    psnr_db: float
    mse: float  # on the 8-bit-equivalent pixel scale of ``max_value``
    modulation_error_rms: float | None = None
    constellation_usage: np.ndarray | None = None


@dataclass
class EvalReport:
    mode: str
    order: int | None
    cbr: float
    seed: int
    max_value: float
    points: list[SnrPoint] = field(default_factory=list)

    @property
    def mse(self) -> float:
        return float(np.mean([p.mse for p in self.points]))

    @property
    def psnr_db(self) -> float:
        return psnr_from_mse(self.mse, self.max_value)

    def per_snr(self) -> list[tuple[float | None, float]]:
        return [(p.snr_db, p.psnr_db) for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for p in self.points:
            w.writerow([
                "noiseless" if p.snr_db is None else repr(float(p.snr_db)),
                format_db(p.psnr_db),
                repr(float(p.mse)),
                self.mode,
                "" if self.order is None else self.order,
                repr(float(self.cbr)),
                self.seed,
            ])
        return buf.getvalue()


def format_db(value: float) -> str:
    return "inf" if math.isinf(value) and value > 0 else repr(float(value))


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["psnr_db"] = float(r["psnr_db"])
        r["mse"] = float(r["mse"])
        r["snr_db"] = None if r["snr_db"] == "noiseless" else float(r["snr_db"])
    return rows
