"""Versioned binary checkpoints of named float64 tensors.

Layout (all integers little endian):

    magic   7 bytes  b"HFCKPT1"
    version u32      format version, currently 1
    count   u32      number of named tensors
    per tensor:
        name_len u16, name utf-8 bytes
        rank     u8
        extents  u32 * rank
        payload  float64 little endian, C order
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"HFCKPT1"
FORMAT_VERSION = 1


def save_checkpoint(path: str, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


class CheckpointError(RuntimeError):
    pass


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"bad checkpoint magic {magic!r}")
        version, count = struct.unpack("<II", fh.read(8))
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<B", fh.read(1))
            extents = struct.unpack(f"<{rank}I", fh.read(4 * rank)) if rank else ()
            n = 1
            for e in extents:
                n *= e
            payload = fh.read(8 * n)
            if len(payload) != 8 * n:
                raise CheckpointError(f"truncated payload for tensor {name!r}")
            out[name] = np.frombuffer(payload, dtype="<f8").reshape(extents).copy()
        return out
