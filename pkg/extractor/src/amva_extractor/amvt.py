"""AMVT tensor format, independently implemented against the wire spec.

Layout (little-endian, no padding, no footer): magic "AMVT", u8 version = 1,
u8 dtype = 1 (float32), u8 rank, rank x u64 dims, row-major float32 payload.
This module deliberately does not import the analytics package; the byte
format is the only contract shared with it.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"AMVT"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEAD = 7  # magic + version + dtype + rank


class AmvtError(ValueError):
    """Malformed AMVT bytes."""


def dump(values: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim < 1 or arr.size == 0:
        raise AmvtError(f"tensors need rank >= 1 and positive dims, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise AmvtError("refusing to write non-finite values")
    header = struct.pack("<4sBBB" + "Q" * arr.ndim, MAGIC, VERSION, DTYPE_FLOAT32,
                         arr.ndim, *arr.shape)
    return header + arr.tobytes()


def load(data: bytes) -> np.ndarray:
    if len(data) < _HEAD or data[:4] != MAGIC:
        raise AmvtError("not an AMVT tensor")
    version, dtype, rank = data[4], data[5], data[6]
    if version != VERSION or dtype != DTYPE_FLOAT32 or rank == 0:
        raise AmvtError(f"unsupported header: version={version} dtype={dtype} rank={rank}")
    dims_end = _HEAD + 8 * rank
    if len(data) < dims_end:
        raise AmvtError("truncated dims")
    dims = struct.unpack_from("<" + "Q" * rank, data, _HEAD)
    count = int(np.prod(dims, dtype=np.uint64))
    if len(data) != dims_end + 4 * count or count == 0:
        raise AmvtError("payload size mismatch")
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=dims_end).reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise AmvtError("payload contains NaN or Inf")
    return arr.copy()


def write(path: str | Path, values: np.ndarray) -> None:
    Path(path).write_bytes(dump(values))


def read(path: str | Path) -> np.ndarray:
    return load(Path(path).read_bytes())


def read_stream(stream) -> np.ndarray | None:
    """Read one tensor from a binary stream; None on clean EOF."""
    head = stream.read(_HEAD)
    if head == b"":
        return None
    if len(head) < _HEAD or head[:4] != MAGIC:
        raise AmvtError("bad tensor header on stream")
    version, dtype, rank = head[4], head[5], head[6]
    if version != VERSION or dtype != DTYPE_FLOAT32 or rank == 0:
        raise AmvtError(f"unsupported header: version={version} dtype={dtype} rank={rank}")
    dims_raw = stream.read(8 * rank)
    if len(dims_raw) < 8 * rank:
        raise AmvtError("truncated dims on stream")
    dims = struct.unpack("<" + "Q" * rank, dims_raw)
    count = int(np.prod(dims, dtype=np.uint64))
    if count == 0:
        raise AmvtError("zero-sized tensor on stream")
    payload = stream.read(4 * count)
    if len(payload) < 4 * count:
        raise AmvtError("truncated payload on stream")
    arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise AmvtError("payload contains NaN or Inf")
    return arr.copy()
