"""Binary PGM (P5) and PPM (P6) images."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..clustering import atomic_write_bytes


class PNMError(ValueError):
    pass


def _tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PNMError("truncated header")
        out.append(data[start:pos])
    return out, pos


def decode_pnm(data: bytes) -> tuple[np.ndarray, int]:
    """Return (H x W x C integer array, maxval)."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise PNMError(f"unsupported magic {magic!r}; only P5 and P6 are read")
    channels = 1 if magic == b"P5" else 3
    (w, h, maxval), pos = _tokens(data, 3, 2)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise PNMError("non-integer header field") from None
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise PNMError(f"bad dimensions or maxval: {w}x{h}, {maxval}")
    pos += 1  # single whitespace byte before the raster
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    size = w * h * channels
    raster = data[pos:pos + size * dtype.itemsize]
    if len(raster) != size * dtype.itemsize:
        raise PNMError("truncated raster")
    px = np.frombuffer(raster, dtype=dtype).reshape(h, w, channels).astype(np.int64)
    if px.max(initial=0) > maxval:
        raise PNMError("sample exceeds maxval")
    return px, maxval


def encode_pnm(pixels, maxval: int = 255) -> bytes:
    px = np.asarray(pixels)
    if px.ndim == 2:
        px = px[:, :, None]
    h, w, c = px.shape
    if c not in (1, 3):
        raise PNMError("need 1 or 3 channels")
    magic = b"P5" if c == 1 else b"P6"
    dtype = ">u2" if maxval > 255 else "u1"
    head = magic + f"\n{w} {h}\n{maxval}\n".encode()
    return head + np.ascontiguousarray(px, dtype=dtype).tobytes()


def read_pnm(path) -> tuple[np.ndarray, int]:
    return decode_pnm(Path(path).read_bytes())


def write_pnm(path, pixels, maxval: int = 255) -> None:
    atomic_write_bytes(path, encode_pnm(pixels, maxval))


def bit_depth(maxval: int) -> int:
    return int(maxval).bit_length()
