"""Minimal CSV helpers with deterministic float formatting.

All delimited output goes through fmt_float so reruns of the same seeded
configuration produce byte-identical files. repr of a Python float is the
shortest string that round-trips exactly, so values recomputed from a CSV
match the in-memory ones bit for bit.
"""

from __future__ import annotations

import os


def fmt_float(v: float) -> str:
    return repr(float(v))


def write_rows(path: str | os.PathLike, header, rows) -> None:
    """Write pre-formatted string rows under a header, LF newlines only."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def read_rows(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    """Read a delimited file back as (header, rows of strings)."""
    with open(path, "r", newline="") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def expect_header(got: list[str], want: list[str], path) -> None:
    if got != list(want):
        raise ValueError(f"{path}: expected header {','.join(want)!r}, got {','.join(got)!r}")
