"""K-means (Lloyd) constellation design in the complex plane.

The encoder's continuous symbols are pooled over a handful of images and
clustered into ``M`` centroids; the centroids become an irregular
constellation shared by the modulator and demodulator.
"""
from __future__ import annotations

import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Rng


@dataclass(frozen=True, eq=False)
class Constellation:
    """Ordered set of distinct complex points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128).ravel()
        if pts.size == 0:
            raise ValueError("constellation must have at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("constellation points must be finite")
        if np.unique(pts).size != pts.size:
            raise ValueError("constellation points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def order(self) -> int:
        return self.points.size

    def __len__(self) -> int:
        return self.points.size

    def minimum_distance(self) -> float:
        if self.order < 2:
            return float("inf")
        diff = np.abs(self.points[:, None] - self.points[None, :])
        diff[np.diag_indices(self.order)] = np.inf
        return float(diff.min())

    def to_text(self) -> str:
        lines = [f"M={self.order}"]
        lines += [f"{i},{float(p.real)!r},{float(p.imag)!r}" for i, p in enumerate(self.points)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Constellation":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("M="):
            raise ValueError("constellation file must start with 'M=<order>'")
        order = int(lines[0][2:])
        pts = np.empty(order, dtype=np.complex128)
        seen = set()
        for ln in lines[1:]:
            idx, re, im = ln.split(",")
            i = int(idx)
            if not 0 <= i < order or i in seen:
                raise ValueError(f"bad or duplicate constellation index {i}")
            seen.add(i)
            pts[i] = complex(float(re), float(im))
        if len(seen) != order:
            raise ValueError(f"expected {order} points, found {len(seen)}")
        return cls(pts)

    def save(self, path) -> None:
        atomic_write_text(path, self.to_text())

    @classmethod
    def load(cls, path) -> "Constellation":
        return cls.from_text(Path(path).read_text())


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def squared_distances(samples, points) -> np.ndarray:
    """(N, M) matrix of |c_j - s_i|^2 computed on the I/Q coordinates."""
    s = np.asarray(samples, dtype=np.complex128).ravel()
    c = np.asarray(points, dtype=np.complex128).ravel()
    dr = s.real[:, None] - c.real[None, :]
    di = s.imag[:, None] - c.imag[None, :]
    return dr * dr + di * di


def assign(samples, constellation) -> np.ndarray | int:
    """Index of the nearest constellation point; ties go to the lowest index."""
    pts = constellation.points if isinstance(constellation, Constellation) else constellation
    scalar = np.ndim(samples) == 0
    s = np.asarray(samples, dtype=np.complex128)
    # chunked to bound the (N, M) distance matrix
    flat = s.ravel()
    out = np.empty(flat.size, dtype=np.int64)
    step = max(1, 2_000_000 // max(len(pts), 1))
    for lo in range(0, flat.size, step):
        out[lo:lo + step] = np.argmin(squared_distances(flat[lo:lo + step], pts), axis=1)
    if scalar:
        return int(out[0])
    return out.reshape(s.shape)


def objective(samples, centroids, labels) -> float:
    """Within-cluster sum of squared distances."""
    s = np.asarray(samples, dtype=np.complex128)
    diff = s - np.asarray(centroids)[labels]
    return float(np.sum(diff.real**2 + diff.imag**2))


@dataclass
class ClusterFit:
    constellation: Constellation
    labels: np.ndarray
    converged: bool
    iterations: int
    objective_history: list[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def _init_random(samples: np.ndarray, order: int, rng: Rng) -> np.ndarray:
    # M distinct values, drawn without replacement from the distinct samples
    distinct = np.unique(samples)
    return distinct[rng.choice(distinct.size, order)]


def _init_plus_plus(samples: np.ndarray, order: int, rng: Rng) -> np.ndarray:
    distinct = np.unique(samples)
    centers = [distinct[rng.integers(distinct.size)]]
    d2 = np.abs(distinct - centers[0]) ** 2
    for _ in range(1, order):
        probs = d2 / d2.sum()
        idx = int(np.searchsorted(np.cumsum(probs), rng.uniform(), side="right"))
        idx = min(idx, distinct.size - 1)
        while d2[idx] == 0:  # only possible through round-off at the cdf edge
            idx = int(np.argmax(d2))
        centers.append(distinct[idx])
        d2 = np.minimum(d2, np.abs(distinct - distinct[idx]) ** 2)
    return np.array(centers)


def _repair_empty(samples, centroids, labels, dist2):
    """Reseat every empty centroid at the sample farthest from its own centroid."""
    counts = np.bincount(labels, minlength=centroids.size)
    for j in np.flatnonzero(counts == 0):
        far = int(np.argmax(dist2))
        centroids[j] = samples[far]
        labels[far] = j
        dist2[far] = 0.0
    return centroids, labels


def fit(samples, order: int, rng: Rng, max_iters: int = 300, init="random") -> ClusterFit:
    """Lloyd iteration until no sample changes cluster.

    ``init`` is ``"random"`` (M distinct samples), ``"kmeans++"`` or an explicit
    array of starting centroids.  The returned labels are the assignment to
    the returned centroids.
    """
    s = np.asarray(samples, dtype=np.complex128).ravel()
    if s.size == 0 or not np.all(np.isfinite(s)):
        raise ValueError("samples must be non-empty and finite")
    if order < 2:
        raise ValueError(f"modulation order must be at least 2, got {order}")
    n_distinct = np.unique(s).size
    if order > n_distinct:
        raise ValueError(f"cannot fit {order} centroids to {n_distinct} distinct samples")

    if isinstance(init, str):
        if init == "random":
            centroids = _init_random(s, order, rng)
        elif init in ("kmeans++", "k-means++"):
            centroids = _init_plus_plus(s, order, rng)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        centroids = np.array(init, dtype=np.complex128).ravel()
        if centroids.size != order:
            raise ValueError("explicit init must have exactly `order` points")
    centroids = centroids.copy()

    d2 = squared_distances(s, centroids)
    labels = np.argmin(d2, axis=1)
    dist2 = d2[np.arange(s.size), labels]
    centroids, labels = _repair_empty(s, centroids, labels, dist2)
    history = [objective(s, centroids, labels)]

    converged = False
    it = 0
    while it < max_iters:
        it += 1
        counts = np.bincount(labels, minlength=order)
        sums_re = np.bincount(labels, weights=s.real, minlength=order)
        sums_im = np.bincount(labels, weights=s.imag, minlength=order)
        nonempty = counts > 0
        centroids[nonempty] = (sums_re[nonempty] + 1j * sums_im[nonempty]) / counts[nonempty]

        d2 = squared_distances(s, centroids)
        new_labels = np.argmin(d2, axis=1)
        dist2 = d2[np.arange(s.size), new_labels]
        centroids, new_labels = _repair_empty(s, centroids, new_labels, dist2)
        history.append(objective(s, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            converged = True
            break
        labels = new_labels

    if not converged:
        warnings.warn(f"k-means did not converge within {max_iters} iterations", RuntimeWarning)
    if np.unique(centroids).size != order:
        # coincident centroids can only arise from degenerate inputs; separate them
        raise ValueError("k-means produced coincident centroids")
    return ClusterFit(Constellation(centroids), labels, converged, it, history)
