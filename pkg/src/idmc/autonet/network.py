"""Fully connected SNR-conditioned encoder and decoder."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import Rng, reals_to_complex, complex_to_reals
from . import tape

SNR_SCALE = 20.0  # conditioning input is snr_db / SNR_SCALE

Layers = list  # list of (weight (n_in, n_out), bias (n_out,)) pairs


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """H x W x C image with pixels normalised to [0, 1]."""

    pixels: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3:
            raise ValueError(f"image must be H x W x C, got shape {px.shape}")
        if np.any(px < 0) or np.any(px > 1):
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape

    @property
    def n(self) -> int:
        return self.pixels.size

    @property
    def max_value(self) -> int:
        return 2**self.bit_depth - 1

    def flat(self) -> np.ndarray:
        return self.pixels.reshape(-1)


@dataclass
class CodecParams:
    encoder: Layers
    decoder: Layers
    distance: float | None = None

    @property
    def n(self) -> int:
        return self.encoder[0][0].shape[0] - 1

    @property
    def k(self) -> int:
        return self.encoder[-1][0].shape[1] // 2

    def arrays(self) -> list[np.ndarray]:
        """Weights then bias, encoder layers first, in declaration order."""
        out = []
        for w, b in self.encoder + self.decoder:
            out += [w, b]
        return out

    def shape_table(self) -> list[tuple[int, int]]:
        return [w.shape for w, _ in self.encoder + self.decoder]

    def replace_arrays(self, arrays, distance=...) -> "CodecParams":
        it = iter(arrays)
        enc = [(next(it), next(it)) for _ in self.encoder]
        dec = [(next(it), next(it)) for _ in self.decoder]
        return CodecParams(enc, dec, self.distance if distance is ... else distance)

    def copy(self) -> "CodecParams":
        return self.replace_arrays([a.copy() for a in self.arrays()])

    def architecture(self) -> tuple[int, int, tuple]:
        return self.n, self.k, tuple(self.shape_table())


def layer_sizes(n: int, k: int, hidden_layers: int = 2, hidden_width: int | None = None):
    """(encoder sizes, decoder sizes) including the SNR input column."""
    width = 4 * n if hidden_width is None else hidden_width
    hidden = [width] * hidden_layers
    return [n + 1, *hidden, 2 * k], [2 * k + 1, *hidden, n]


def _glorot(rng: Rng, sizes) -> Layers:
    layers = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (n_in + n_out))
        layers.append((rng.uniform(-limit, limit, (n_in, n_out)), np.zeros(n_out)))
    return layers


def init_params(n: int, k: int, rng: Rng, hidden_layers: int = 2, hidden_width: int | None = None) -> CodecParams:
    enc_sizes, dec_sizes = layer_sizes(n, k, hidden_layers, hidden_width)
    return CodecParams(_glorot(rng, enc_sizes), _glorot(rng, dec_sizes))


def _batch(x) -> np.ndarray:
    if isinstance(x, ImageTensor):
        return x.flat()[None, :]
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x.reshape(x.shape[0], -1)


def _mlp(h: tape.Node, layers) -> tape.Node:
    for i, (w, b) in enumerate(layers):
        h = tape.affine(h, w, b)
        if i < len(layers) - 1:
            h = tape.tanh(h)
    return h


def _with_snr(h: tape.Node, snr_db: float) -> tape.Node:
    col = np.full((h.value.shape[0], 1), snr_db / SNR_SCALE)
    return tape.concat(h, tape.const(col))


def encoder_graph(x: tape.Node, snr_db: float, layers) -> tape.Node:
    """Graph for the encoder: 2k reals per row."""
    if x.value.shape[-1] + 1 != layers[0][0].value.shape[0]:
        raise ValueError(f"encoder expects {layers[0][0].value.shape[0] - 1} inputs, got {x.value.shape[-1]}")
    return _mlp(_with_snr(x, snr_db), layers)


def decoder_graph(y: tape.Node, snr_db: float, layers) -> tape.Node:
    if y.value.shape[-1] + 1 != layers[0][0].value.shape[0]:
        raise ValueError(f"decoder expects {layers[0][0].value.shape[0] - 1} inputs, got {y.value.shape[-1]}")
    return _mlp(_with_snr(y, snr_db), layers)


def _const_layers(layers):
    return [(tape.const(w), tape.const(b)) for w, b in layers]


def encode(x, snr_db: float, params: CodecParams) -> np.ndarray:
    """Encoder output as k complex symbols per image, shape (B, k)."""
    out = encoder_graph(tape.const(_batch(x)), snr_db, _const_layers(params.encoder))
    return reals_to_complex(out.value)


def decode(y_hat, snr_db: float, params: CodecParams, clamp: bool = True) -> np.ndarray:
    """Reconstruction (B, n); clamped to [0, 1] unless ``clamp`` is off."""
    y = np.asarray(y_hat)
    reals = complex_to_reals(y).reshape(y.shape[0], -1) if np.iscomplexobj(y) else _batch(y)
    out = decoder_graph(tape.const(reals), snr_db, _const_layers(params.decoder)).value
    return np.clip(out, 0.0, 1.0) if clamp else out


@dataclass
class Graph:
    """One forward pass through the full chain, with handles on the leaves."""

    loss: tape.Node
    leaves: list
    distance: tape.Node | None
    symbols: tape.Node  # normalised encoder output
    received: tape.Node  # decoder input
    output: tape.Node


def build_graph(x_batch, snr_db: float, params: CodecParams, channel, train_distance: bool = False) -> Graph:
    """Forward pass with trainable leaves for every parameter.

    ``channel(symbols_node, distance_node)`` maps the normalised symbols to the
    decoder input node: additive noise for the analog system, the
    straight-through modem for digital ones.
    """
    x = _batch(x_batch)
    leaves = [tape.param(a) for a in params.arrays()]
    it = iter(leaves)
    enc = [(next(it), next(it)) for _ in params.encoder]
    dec = [(next(it), next(it)) for _ in params.decoder]
    dist = tape.param(params.distance) if (train_distance and params.distance is not None) else None
    y = tape.normalize_power(encoder_graph(tape.const(x), snr_db, enc))
    y_hat = channel(y, dist)
    out = decoder_graph(y_hat, snr_db, dec)
    return Graph(tape.mse(out, x), leaves, dist, y, y_hat, out)
