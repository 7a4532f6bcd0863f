"""Shared low-level helpers for the binary record formats."""

from __future__ import annotations

import zlib
from typing import BinaryIO

from .errors import FormatError


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    """Read exactly ``n`` bytes or raise a FormatError at the failure offset."""
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file while reading {what}",
                          offset=fh.tell() - len(data))
    return data
