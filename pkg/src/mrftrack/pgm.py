"""Binary PGM (P5) reader/writer for 8-bit grayscale frames.

Intensities map to [0, 1] by v / 255 on read and round(v * 255) on write.
"""

from __future__ import annotations

import os

import numpy as np

from .geometry import Frame


class PgmError(ValueError):
    """Raised for malformed or unsupported PGM data."""


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(buf)
    while pos < n:
        ch = buf[pos : pos + 1]
        if ch == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise PgmError("truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path: str | os.PathLike) -> Frame:
    """Read a binary 8-bit P5 file into a Frame."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, pos = _read_token(buf, 0)
    if magic != b"P5":
        raise PgmError(f"{path}: expected P5 magic, got {magic!r}")
    wtok, pos = _read_token(buf, pos)
    htok, pos = _read_token(buf, pos)
    mtok, pos = _read_token(buf, pos)
    try:
        width, height, maxval = int(wtok), int(htok), int(mtok)
    except ValueError as exc:
        raise PgmError(f"{path}: non-numeric PGM header") from exc
    if width <= 0 or height <= 0:
        raise PgmError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise PgmError(f"{path}: only 8-bit maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = buf[pos : pos + width * height]
    if len(raster) != width * height:
        raise PgmError(f"{path}: raster truncated ({len(raster)} of {width * height} bytes)")
    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return Frame(data.astype(np.float32) / 255.0)


def write_pgm(frame: Frame, path: str | os.PathLike) -> None:
    """Write a Frame as binary 8-bit P5."""
    data = np.clip(np.rint(frame.pixels * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())
