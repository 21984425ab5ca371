"""Binary weights container: magic "LNK1", little-endian layout, float32
payloads. The tensor inventory must match the fixed architecture exactly."""

from __future__ import annotations

import struct

import numpy as np

from .model import LinkerParams, architecture

MAGIC = b"LNK1"
VERSION = 1


class WeightsFormatError(ValueError):
    pass


def save_params(params: LinkerParams) -> bytes:
    """Serialize: magic, version u32, tensor count u32, then per tensor the
    name (u16 length + UTF-8), rank u8, dims u32 each, float32 payload.
    Values are stored at float32 precision."""
    out = bytearray(MAGIC)
    out += struct.pack("<I", VERSION)
    names = sorted(params.tensors)
    out += struct.pack("<I", len(names))
    for name in names:
        arr = params.tensors[name]
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += struct.pack("<B", arr.ndim)
        for dim in arr.shape:
            out += struct.pack("<I", dim)
        out += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return bytes(out)


def load_params(data: bytes) -> LinkerParams:
    """Parse a weights stream, validating the shapes against the fixed
    architecture. Returns float32 parameters."""
    view = memoryview(data)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise WeightsFormatError("truncated weights stream")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise WeightsFormatError("bad magic; not a weights stream")
    version = struct.unpack("<I", take(4))[0]
    if version != VERSION:
        raise WeightsFormatError(f"unsupported weights version {version}")
    count = struct.unpack("<I", take(4))[0]
    expected = architecture()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len = struct.unpack("<H", take(2))[0]
        name = bytes(take(name_len)).decode("utf-8")
        if name in tensors:
            raise WeightsFormatError(f"duplicate tensor {name!r}")
        if name not in expected:
            raise WeightsFormatError(f"unknown tensor {name!r}")
        rank = struct.unpack("<B", take(1))[0]
        shape = tuple(struct.unpack("<I", take(4))[0] for _ in range(rank))
        if shape != expected[name]:
            raise WeightsFormatError(
                f"tensor {name!r}: shape {shape} does not match architecture "
                f"{expected[name]}")
        size = int(np.prod(shape)) if shape else 1
        payload = take(size * 4)
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    if pos != len(view):
        raise WeightsFormatError("trailing bytes after last tensor")
    if set(tensors) != set(expected):
        missing = sorted(set(expected) - set(tensors))
        raise WeightsFormatError(f"missing tensors: {missing}")
    return LinkerParams(tensors)
