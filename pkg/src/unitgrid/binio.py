"""Helpers shared by the little-endian binary file formats."""

from __future__ import annotations

import struct
from typing import BinaryIO


class FormatError(ValueError):
    """A binary file does not match its declared layout."""


def read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file: expected {n} bytes for {what}, got {len(data)}")
    return data


def check_magic(fh: BinaryIO, magic: bytes) -> None:
    got = fh.read(len(magic))
    if got != magic:
        raise FormatError(f"bad magic: expected {magic!r}, got {got!r}")


def check_version(fh: BinaryIO, expected: int) -> None:
    (version,) = struct.unpack("<H", read_exact(fh, 2, "version"))
    if version != expected:
        raise FormatError(f"unsupported format version {version} (expected {expected})")
    (reserved,) = struct.unpack("<H", read_exact(fh, 2, "reserved field"))
    if reserved != 0:
        raise FormatError(f"reserved field must be 0, got {reserved}")
