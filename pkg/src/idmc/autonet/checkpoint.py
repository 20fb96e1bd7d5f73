"""Binary checkpoint format.

Little-endian throughout::

    magic        4 bytes   b"IDMC"
    version      uint32    1
    mode         uint8     0 analog, 1 regular, 2 irregular
    n_encoder    uint32    number of encoder layers
    n_decoder    uint32    number of decoder layers
    shapes       (n_encoder + n_decoder) x (uint32 rows, uint32 cols)
    payload      float32   per layer: weight (row-major, rows x cols) then bias (cols)
    footer       float64   constellation distance, regular mode only
"""
from __future__ import annotations

import struct

import numpy as np

from ..clustering import atomic_write_bytes
from ..errors import ConfigError
from .network import CodecParams

MAGIC = b"IDMC"
VERSION = 1
MODES = ("analog", "regular", "irregular")
_HEAD = struct.Struct("<4sIBII")
_SHAPE = struct.Struct("<II")


def to_bytes(params: CodecParams, mode: str) -> bytes:
    if mode not in MODES:
        raise ValueError(f"unknown checkpoint mode {mode!r}")
    if mode == "regular" and params.distance is None:
        raise ValueError("regular checkpoints need a constellation distance")
    parts = [_HEAD.pack(MAGIC, VERSION, MODES.index(mode), len(params.encoder), len(params.decoder))]
    parts += [_SHAPE.pack(*shape) for shape in params.shape_table()]
    parts += [np.ascontiguousarray(a, dtype="<f4").tobytes() for a in params.arrays()]
    if mode == "regular":
        parts.append(struct.pack("<d", params.distance))
    return b"".join(parts)


def from_bytes(data: bytes) -> tuple[CodecParams, str]:
    if len(data) < _HEAD.size:
        raise ConfigError("checkpoint truncated")
    magic, version, mode_id, n_enc, n_dec = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise ConfigError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise ConfigError(f"unsupported checkpoint version {version}")
    if mode_id >= len(MODES):
        raise ConfigError(f"bad checkpoint mode {mode_id}")
    mode = MODES[mode_id]
    off = _HEAD.size
    shapes = []
    for _ in range(n_enc + n_dec):
        shapes.append(_SHAPE.unpack_from(data, off))
        off += _SHAPE.size
    layers = []
    for rows, cols in shapes:
        w = np.frombuffer(data, "<f4", rows * cols, off).reshape(rows, cols).astype(np.float64)
        off += 4 * rows * cols
        b = np.frombuffer(data, "<f4", cols, off).astype(np.float64)
        off += 4 * cols
        layers.append((w, b))
    distance = None
    if mode == "regular":
        (distance,) = struct.unpack_from("<d", data, off)
        off += 8
    if off != len(data):
        raise ConfigError(f"checkpoint has {len(data) - off} trailing bytes")
    return CodecParams(layers[:n_enc], layers[n_enc:], distance), mode


def save(path, params: CodecParams, mode: str) -> None:
    atomic_write_bytes(path, to_bytes(params, mode))


def load(path) -> tuple[CodecParams, str]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_bytes(data)
