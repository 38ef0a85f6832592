"""Minimal binary PGM (P5) reader/writer for 8- and 16-bit grey images."""
from __future__ import annotations

import numpy as np

from .errors import MalformedImage


def _tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping comments."""
    values = []
    pos = 0
    n = len(data)
    while len(values) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedImage("PGM header ends early")
        try:
            values.append(int(data[start:pos]))
        except ValueError:
            raise MalformedImage(f"bad PGM header token {data[start:pos]!r}") from None
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not data[pos:pos + 1].isspace():
        raise MalformedImage("missing whitespace after PGM header")
    return values, pos + 1


def decode_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Return (pixels as (H, W) uint8/uint16 array, maxval)."""
    if data[:2] != b"P5":
        raise MalformedImage("not a binary PGM (P5) image")
    (width, height, maxval), start = _tokens(data[2:], 3)
    start += 2
    if width < 1 or height < 1:
        raise MalformedImage(f"bad PGM size {width}x{height}")
    if not 0 < maxval < 65536:
        raise MalformedImage(f"bad PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    size = width * height * dtype.itemsize
    raster = data[start:start + size]
    if len(raster) != size:
        raise MalformedImage(f"PGM raster has {len(raster)} bytes, expected {size}")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    if pixels.max(initial=0) > maxval:
        raise MalformedImage("PGM pixel exceeds maxval")
    return pixels.astype(np.uint16 if maxval > 255 else np.uint8), maxval


def encode_pgm(pixels: np.ndarray, maxval: int | None = None) -> bytes:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise MalformedImage("PGM images are 2-D")
    if maxval is None:
        maxval = 255 if pixels.max(initial=0) <= 255 else 65535
    if pixels.min(initial=0) < 0 or pixels.max(initial=0) > maxval:
        raise MalformedImage(f"pixel values outside 0..{maxval}")
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + np.ascontiguousarray(pixels, dtype=dtype).tobytes()


def read_pgm(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path, pixels: np.ndarray, maxval: int | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(pixels, maxval))
