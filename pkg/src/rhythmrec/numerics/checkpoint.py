"""Flat binary container of named float64 arrays.

Layout (all integers little-endian)::

    magic    4 bytes  b"RRCK"
    version  uint32   currently 1
    count    uint32   number of arrays
    then per array, in insertion order:
      name_len uint16, name (UTF-8)
      ndim     uint8,  dims (uint64 each)
      values   little-endian float64, row-major
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RRCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(arrays: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(arrays)))
    for name, arr in arrays.items():
        arr = np.require(np.asarray(arr, dtype="<f8"), requirements="C")
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        buf.write(arr.tobytes(order="C"))
    return buf.getvalue()


def loads(blob: bytes) -> dict[str, np.ndarray]:
    view = memoryview(blob)
    if bytes(view[:4]) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, count = struct.unpack_from("<II", view, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 12
    out: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", view, pos)
            pos += 2
            name = bytes(view[pos:pos + n]).decode("utf-8")
            pos += n
            (ndim,) = struct.unpack_from("<B", view, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}Q", view, pos)
            pos += 8 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            arr = np.frombuffer(view, dtype="<f8", count=size, offset=pos).reshape(shape)
            pos += 8 * size
            out[name] = arr.astype(np.float64)
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from exc
    if pos != len(view):
        raise CheckpointError("trailing bytes after last array")
    return out


def save(path: str | Path, arrays: dict[str, np.ndarray]) -> str:
    """Write ``arrays`` to ``path`` and return the SHA-256 of the bytes written."""
    blob = dumps(arrays)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def load(path: str | Path) -> dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())


def digest(arrays: dict[str, np.ndarray]) -> str:
    return hashlib.sha256(dumps(arrays)).hexdigest()
