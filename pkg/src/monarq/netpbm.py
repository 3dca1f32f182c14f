"""Minimal PGM (P2 ASCII / P5 binary) reader and writer."""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError


def _tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
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
            raise DataFormatError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos


def parse_pgm(data: bytes):
    """Return ``(pixels, maxval)``; pixels is an int array of shape (H, W)."""
    if data[:2] not in (b"P2", b"P5"):
        raise DataFormatError(f"not a PGM file (magic {data[:2]!r})")
    magic = data[:2]
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise DataFormatError("malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise DataFormatError(f"bad PGM geometry {width}x{height}, maxval {maxval}")
    if magic == b"P5":
        pos += 1  # exactly one whitespace byte separates header and raster
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = width * height * dtype.itemsize
        raster = data[pos:pos + need]
        if len(raster) < need:
            raise DataFormatError("PGM raster is truncated")
        pixels = np.frombuffer(raster, dtype=dtype).astype(np.int64)
    else:
        try:
            values, _ = _tokens(data, width * height, pos)
            pixels = np.array([int(v) for v in values], dtype=np.int64)
        except (DataFormatError, ValueError):
            raise DataFormatError("PGM raster is truncated or not numeric") from None
    if pixels.max(initial=0) > maxval:
        raise DataFormatError("pixel value exceeds maxval")
    return pixels.reshape(height, width), maxval


def read_pgm(path):
    try:
        with open(path, "rb") as fh:
            return parse_pgm(fh.read())
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from None


def format_pgm(pixels, maxval: int = 255, binary: bool = True) -> bytes:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    if not 0 < maxval <= 65535:
        raise ValueError(f"maxval {maxval} outside 1..65535")
    if pixels.min(initial=0) < 0 or pixels.max(initial=0) > maxval:
        raise ValueError("pixel values outside [0, maxval]")
    height, width = pixels.shape
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n{maxval}\n".encode()
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        return header + pixels.astype(dtype).tobytes()
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in pixels)
    return header + rows.encode() + b"\n"


def write_pgm(path, pixels, maxval: int = 255, binary: bool = True):
    with open(path, "wb") as fh:
        fh.write(format_pgm(pixels, maxval, binary))
