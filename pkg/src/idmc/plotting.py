"""Figures for sweep results and symbol distributions.

Uses the non-interactive Agg backend; every function writes one image file.
"""
from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0


def _figure(width=6.0, height=None, **kw):
    return plt.subplots(figsize=(width, height or width * GOLDEN), **kw)


def _label(row) -> str:
    if row["mode"] == "analog":
        return "analog"
    return f"{row['mode']} M={row['order']}"


def plot_sweep(rows, path, title: str | None = None) -> Path:
    """PSNR versus SNR, one line per (mode, order); ``rows`` as from ``read_sweep_csv``."""
    curves = defaultdict(list)
    for r in rows:
        if r["snr_db"] is not None:
            curves[_label(r)].append((r["snr_db"], r["psnr_db"]))
    fig, ax = _figure()
    for label, pts in sorted(curves.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("PSNR (dB)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_distribution(samples, dist, path, constellation=None) -> Path:
    """Scatter of the I/Q samples with both marginal densities and optional centroids."""
    s = np.asarray(samples, dtype=np.complex128).ravel()
    fig = plt.figure(figsize=(6, 6))
    grid = fig.add_gridspec(2, 2, width_ratios=(4, 1), height_ratios=(1, 4), wspace=0.05, hspace=0.05)
    ax = fig.add_subplot(grid[1, 0])
    top = fig.add_subplot(grid[0, 0], sharex=ax)
    right = fig.add_subplot(grid[1, 1], sharey=ax)
    ax.scatter(s.real, s.imag, s=2, alpha=0.3, color="tab:blue", label="symbols")
    if constellation is not None:
        pts = np.asarray(getattr(constellation, "points", constellation))
        ax.scatter(pts.real, pts.imag, s=30, marker="x", color="tab:red", label="constellation")
        ax.legend(fontsize=8, loc="upper right")
    centers = dist.centers
    width = dist.edges[1] - dist.edges[0]
    top.bar(centers, dist.inphase_density, width=width, color="tab:gray")
    right.barh(centers, dist.quadrature_density, height=width, color="tab:gray")
    top.tick_params(labelbottom=False)
    right.tick_params(labelleft=False)
    ax.set_xlabel("in-phase")
    ax.set_ylabel("quadrature")
    lim = dist.edges[-1]
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return Path(path)
