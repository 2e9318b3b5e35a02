"""Independent reader/writer for the MSTT tensor interchange format.

Deliberately self-contained: the binding layer talks to the native toolkit
only through files and JSON, never through its Python API.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"MSTT"
VERSION = 1

__all__ = ["MAGIC", "VERSION", "load", "store", "TensorFileError"]


class TensorFileError(ValueError):
    """Malformed tensor file."""


def load(path) -> np.ndarray:
    """Read one float32 tensor; validates magic, version and payload size."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise TensorFileError(f"{path}: not a tensor file")
    version, rank = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise TensorFileError(f"{path}: unsupported version {version}")
    if not 1 <= rank <= 32 or len(data) < 12 + 4 * rank:
        raise TensorFileError(f"{path}: bad rank {rank}")
    shape = struct.unpack_from(f"<{rank}I", data, 12)
    count = int(np.prod(shape, dtype=np.uint64))
    start = 12 + 4 * rank
    if len(data) != start + 4 * count or any(e < 1 for e in shape):
        raise TensorFileError(f"{path}: inconsistent extents {shape}")
    return np.frombuffer(data, dtype="<f4", count=count,
                         offset=start).reshape(shape).copy()


def store(path, array) -> None:
    """Write one float32 tensor."""
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())
