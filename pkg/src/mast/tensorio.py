"""Binary tensor file format used for every tensor exchanged on disk.

Layout (little-endian): 4-byte magic ``MSTT``, u32 version (currently 1),
u32 rank, ``rank`` u32 extents, then ``prod(extents)`` float32 values in
row-major order.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInput

MAGIC = b"MSTT"
VERSION = 1
_MAX_RANK = 32

__all__ = ["MAGIC", "VERSION", "read_tensor", "write_tensor", "tensor_digest"]


def write_tensor(path, array) -> None:
    """Write an array as a float32 row-major tensor file."""
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    if arr.ndim < 1:
        arr = arr.reshape(1)
    if any(e < 1 for e in arr.shape):
        raise InvalidInput(f"write_tensor: extents must be >= 1, got {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a tensor file back as a float32 array; rejects malformed files."""
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError(f"{path}: truncated tensor file")
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, rank = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if rank < 1 or rank > _MAX_RANK:
        raise FormatError(f"{path}: implausible rank {rank}")
    header_end = 12 + 4 * rank
    if len(data) < header_end:
        raise FormatError(f"{path}: truncated extent table")
    shape = struct.unpack_from(f"<{rank}I", data, 12)
    if any(e < 1 for e in shape):
        raise FormatError(f"{path}: zero extent in {shape}")
    count = int(np.prod(shape, dtype=np.uint64))
    expected = header_end + 4 * count
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload size {len(data) - header_end} bytes, expected {4 * count}")
    flat = np.frombuffer(data, dtype="<f4", count=count, offset=header_end)
    return flat.reshape(shape).copy()


def tensor_digest(array) -> str:
    """SHA-256 of the float32 little-endian row-major payload."""
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    return hashlib.sha256(arr.tobytes()).hexdigest()
