"""Training/test image sets: a synthetic low-rank source and PGM/PPM directories."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Rng, Stream
from ..errors import ConfigError
from .config import ExperimentConfig
from .pnm import PNMError, bit_depth, read_pnm

SYNTHETIC_GAIN = 1.5


@dataclass
class Dataset:
    """Flattened images in [0, 1]: ``train`` is (N_train, n), ``test`` is (N_test, n)."""

    train: np.ndarray
    test: np.ndarray
    shape: tuple[int, int, int]
    bit_depth: int = 8

    @property
    def n(self) -> int:
        return self.train.shape[1]

    @property
    def max_value(self) -> int:
        return 2**self.bit_depth - 1


def synthetic_images(count: int, shape, rank: int, rng: Rng, factors=None) -> tuple[np.ndarray, np.ndarray]:
    """Logistic-squashed rank-``rank`` Gaussian factor model, 8-bit quantised."""
    n = int(np.prod(shape))
    if factors is None:
        factors = rng.normal((rank, n)) * (SYNTHETIC_GAIN / np.sqrt(rank))
    latent = rng.normal((count, rank))
    px = 1.0 / (1.0 + np.exp(-(latent @ factors)))
    return np.round(px * 255.0) / 255.0, factors


def synthetic_dataset(config: ExperimentConfig) -> Dataset:
    shape = (config.image_height, config.image_width, config.image_channels)
    rng = Rng(config.data_seed, Stream.DATA)
    train, factors = synthetic_images(config.train_size, shape, config.rank, rng)
    test, _ = synthetic_images(config.test_size, shape, config.rank, rng, factors)
    return Dataset(train, test, shape, 8)


def directory_dataset(config: ExperimentConfig) -> Dataset:
    """Images sorted by file name: the first ``train_size`` train, the next ``test_size`` test."""
    root = Path(config.dataset_dir)
    if not root.is_dir():
        raise ConfigError(f"dataset directory {root} does not exist")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in (".pgm", ".ppm"))
    need = config.train_size + config.test_size
    if len(files) < need:
        raise ConfigError(f"{root} holds {len(files)} images, config needs {need}")
    shape = (config.image_height, config.image_width, config.image_channels)
    images, depth = [], None
    for path in files[:need]:
        try:
            px, maxval = read_pnm(path)
        except (OSError, PNMError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if px.shape != shape:
            raise ConfigError(f"{path}: shape {px.shape} does not match config {shape}")
        if depth is None:
            depth = maxval
        elif maxval != depth:
            raise ConfigError(f"{path}: maxval {maxval} differs from {depth}")
        images.append(px.reshape(-1) / maxval)
    arr = np.array(images, dtype=np.float64)
    return Dataset(arr[:config.train_size], arr[config.train_size:], shape, bit_depth(depth))


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset == "synthetic":
        return synthetic_dataset(config)
    return directory_dataset(config)
