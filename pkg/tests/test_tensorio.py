import struct

import numpy as np
import pytest

from mast.errors import FormatError
from mast.tensorio import MAGIC, VERSION, read_tensor, tensor_digest, write_tensor


@pytest.mark.parametrize("shape", [(1,), (3, 4), (2, 3, 4, 5)])
def test_roundtrip(tmp_path, shape):
    rng = np.random.Generator(np.random.Philox(seed=1))
    arr = rng.standard_normal(shape).astype(np.float32)
    path = tmp_path / "t.mstt"
    write_tensor(path, arr)
    back = read_tensor(path)
    assert back.shape == shape
    np.testing.assert_array_equal(back, arr)


def test_header_layout(tmp_path):
    path = tmp_path / "t.mstt"
    write_tensor(path, np.arange(6, dtype=np.float32).reshape(2, 3))
    data = path.read_bytes()
    assert data[:4] == MAGIC
    version, rank = struct.unpack_from("<II", data, 4)
    assert (version, rank) == (VERSION, 2)
    assert struct.unpack_from("<II", data, 12) == (2, 3)
    assert len(data) == 12 + 8 + 6 * 4


def test_wrong_magic(tmp_path):
    path = tmp_path / "bad.mstt"
    path.write_bytes(b"XXXX" + b"\x00" * 16)
    with pytest.raises(FormatError):
        read_tensor(path)


def test_wrong_version(tmp_path):
    path = tmp_path / "bad.mstt"
    path.write_bytes(MAGIC + struct.pack("<III", 2, 1, 1) + b"\x00" * 4)
    with pytest.raises(FormatError):
        read_tensor(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "bad.mstt"
    path.write_bytes(MAGIC + struct.pack("<III", 1, 1, 4) + b"\x00" * 8)
    with pytest.raises(FormatError):
        read_tensor(path)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "bad.mstt"
    path.write_bytes(MAGIC + struct.pack("<III", 1, 1, 1) + b"\x00" * 8)
    with pytest.raises(FormatError):
        read_tensor(path)


def test_zero_extent_rejected(tmp_path):
    path = tmp_path / "bad.mstt"
    path.write_bytes(MAGIC + struct.pack("<III", 1, 1, 0))
    with pytest.raises(FormatError):
        read_tensor(path)


def test_digest_tracks_payload():
    a = np.zeros((2, 2), dtype=np.float32)
    b = np.zeros((2, 2), dtype=np.float32)
    assert tensor_digest(a) == tensor_digest(b)
    b[0, 0] = 1.0
    assert tensor_digest(a) != tensor_digest(b)
