"""Experiment configuration: flat ``key = value`` text with typed parsing.

Blank lines and ``#`` comments are ignored.  Lists are comma separated and
floats may be written as fractions (``cbr = 1/24``).  Unknown keys are
rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..errors import ConfigError

MODES = ("analog", "idmc_r", "idmc_i", "ste_baseline")
NOISELESS = "noiseless"


@dataclass
class ExperimentConfig:
    mode: str = "idmc_r"
    order: int = 16
    cbr: float = 1 / 24
    snr_train_range: tuple = (0.0, 20.0)
    snr_eval_grid: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    epochs_analog: int = 50
    epochs_finetune: int = 25
    batch_size: int = 64
    lr: float = 2e-4
    lr_drop_at: float = 0.8
    lr_drop_factor: float = 0.1
    distance_lr_scale: float = 1.0
    ste_distance: float = 1.0
    seed: int = 1
    dataset: str = "synthetic"
    dataset_dir: str = ""
    data_seed: int = 0
    image_height: int = 8
    image_width: int = 8
    image_channels: int = 1
    train_size: int = 2048
    test_size: int = 512
    synthetic_rank: int = 0  # 0: n // 8
    hidden_layers: int = 2
    hidden_width: int = 0  # 0: 4 * n
    cluster_sample_images: int = 50
    cluster_max_iters: int = 300
    cluster_init: str = "random"
    eval_repeats: int = 1

    def __post_init__(self):
        self.validate()

    @property
    def n(self) -> int:
        return self.image_height * self.image_width * self.image_channels

    @property
    def k(self) -> int:
        return max(1, round(self.cbr * self.n))

    @property
    def width(self) -> int:
        return self.hidden_width or 4 * self.n

    @property
    def rank(self) -> int:
        return self.synthetic_rank or max(1, self.n // 8)

    @property
    def snr_conditioning_noiseless(self) -> float:
        """Conditioning input used for noiseless evaluation."""
        return float(self.snr_train_range[1])

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.cbr <= 1:
            raise ConfigError(f"cbr must lie in (0, 1], got {self.cbr}")
        if len(self.snr_train_range) != 2 or self.snr_train_range[0] > self.snr_train_range[1]:
            raise ConfigError(f"snr_train_range must be 'low, high' with low <= high, got {self.snr_train_range}")
        if not self.snr_eval_grid:
            raise ConfigError("snr_eval_grid is empty")
        if self.mode != "analog":
            from ..quantizer import grid_for_order

            if self.mode in ("idmc_r", "ste_baseline"):
                try:
                    grid_for_order(self.order)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
            elif self.order < 2:
                raise ConfigError(f"order must be at least 2, got {self.order}")
        for name in ("epochs_analog", "epochs_finetune"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("batch_size", "train_size", "test_size", "eval_repeats", "hidden_layers",
                     "image_height", "image_width", "cluster_max_iters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.image_channels not in (1, 3):
            raise ConfigError("image_channels must be 1 or 3")
        if self.lr <= 0 or self.ste_distance <= 0:
            raise ConfigError("lr and ste_distance must be positive")
        if self.dataset not in ("synthetic", "directory"):
            raise ConfigError(f"dataset must be 'synthetic' or 'directory', got {self.dataset!r}")
        if self.dataset == "directory" and not self.dataset_dir:
            raise ConfigError("dataset = directory needs dataset_dir")
        if self.cluster_init not in ("random", "kmeans++"):
            raise ConfigError(f"cluster_init must be 'random' or 'kmeans++', got {self.cluster_init!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(NOISELESS if x is None else repr(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _number(text: str) -> float:
    return float(Fraction(text)) if "/" in text else float(text)


def _parse_value(name: str, default, text: str):
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() not in ("true", "false"):
                raise ValueError(text)
            return text.lower() == "true"
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return _number(text)
        if isinstance(default, tuple):
            items = [t.strip() for t in text.split(",") if t.strip()]
            if name == "snr_eval_grid":
                return tuple(None if t == NOISELESS else _number(t) for t in items)
            return tuple(_number(t) for t in items)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    defaults = ExperimentConfig.__dataclass_fields__
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        default = defaults[key].default
        values[key] = _parse_value(key, default, value)
    for key, value in overrides.items():
        if key not in defaults:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = value
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)
