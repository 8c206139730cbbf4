"""Little-endian binary primitives shared by the checkpoint formats."""

from __future__ import annotations

import struct

import numpy as np


def write_u8(f, value: int) -> None:
    f.write(struct.pack("<B", value))


def write_u32(f, value: int) -> None:
    f.write(struct.pack("<I", value))


def write_u64(f, value: int) -> None:
    f.write(struct.pack("<Q", value))


def write_f64(f, value: float) -> None:
    f.write(struct.pack("<d", value))


def write_str(f, s: str) -> None:
    data = s.encode("utf-8")
    write_u32(f, len(data))
    f.write(data)


def write_array(f, arr: np.ndarray, dtype: str) -> None:
    f.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def _read_exact(f, size: int) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise IOError(f"truncated file: wanted {size} bytes, got {len(data)}")
    return data


def read_u8(f) -> int:
    return struct.unpack("<B", _read_exact(f, 1))[0]


def read_u32(f) -> int:
    return struct.unpack("<I", _read_exact(f, 4))[0]


def read_u64(f) -> int:
    return struct.unpack("<Q", _read_exact(f, 8))[0]


def read_f64(f) -> float:
    return struct.unpack("<d", _read_exact(f, 8))[0]


def read_str(f) -> str:
    n = read_u32(f)
    return _read_exact(f, n).decode("utf-8")


def read_array(f, shape: tuple[int, ...], dtype: str) -> np.ndarray:
    n = int(np.prod(shape)) if shape else 1
    buf = _read_exact(f, n * np.dtype(dtype).itemsize)
    return np.frombuffer(buf, dtype=dtype).reshape(shape).copy()


def check_magic(f, magic: bytes) -> None:
    got = _read_exact(f, len(magic))
    if got != magic:
        raise IOError(f"bad magic: expected {magic!r}, got {got!r}")
