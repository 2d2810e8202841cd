"""Binary file formats.

``TNS1``  tensor: magic, u8 kind (0 real64, 1 complex128), u64 n1, n2, n3,
          then entries in frontal-slice column-major order as little-endian
          f64 (re/im pairs for complex).
``UTM1``  unitary transform: magic, u64 n3, then n3*n3 complex128 entries
          row-major.
``MSK1``  observation mask: magic, u64 n1, n2, n3, then the membership
          bitset over the tensor layout, least-significant bit first.

All integers are little-endian.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .solver import ObservationMask
from .transforms import CUSTOM, UnitaryTransform

TNS_MAGIC = b"TNS1"
UTM_MAGIC = b"UTM1"
MSK_MAGIC = b"MSK1"

_DIMS = struct.Struct("<3Q")
_U64 = struct.Struct("<Q")


class FormatError(ValueError):
    """Raised for malformed or truncated binary files."""


def _read(path: str | os.PathLike) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _expect(buf: bytes, magic: bytes, min_len: int) -> None:
    if buf[:4] != magic:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {magic!r}")
    if len(buf) < min_len:
        raise FormatError("truncated header")


def encode_tensor(a: np.ndarray) -> bytes:
    if a.ndim != 3:
        raise ValueError("only third-order tensors can be written")
    is_complex = np.iscomplexobj(a)
    dtype = "<c16" if is_complex else "<f8"
    payload = np.asarray(a).ravel(order="F").astype(dtype, copy=False).tobytes()
    return TNS_MAGIC + bytes([int(is_complex)]) + _DIMS.pack(*a.shape) + payload


def decode_tensor(buf: bytes) -> np.ndarray:
    head = 5 + _DIMS.size
    _expect(buf, TNS_MAGIC, head)
    kind = buf[4]
    if kind not in (0, 1):
        raise FormatError(f"unknown scalar kind byte {kind}")
    dims = _DIMS.unpack_from(buf, 5)
    if min(dims) < 1:
        raise FormatError(f"invalid dims {dims}")
    dtype = np.dtype("<c16" if kind else "<f8")
    count = dims[0] * dims[1] * dims[2]
    if len(buf) != head + count * dtype.itemsize:
        raise FormatError(f"payload size {len(buf) - head} does not match dims {dims}")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=head)
    return np.array(data.reshape(dims, order="F"), dtype=dtype.newbyteorder("="), order="F")


def write_tensor(path: str | os.PathLike, a: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_tensor(a))


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    return decode_tensor(_read(path))


def encode_transform(t: UnitaryTransform) -> bytes:
    mat = np.asarray(t.matrix, dtype="<c16")
    return UTM_MAGIC + _U64.pack(t.n3) + mat.tobytes(order="C")


def decode_transform(buf: bytes, tol: float = 1e-8) -> UnitaryTransform:
    head = 4 + _U64.size
    _expect(buf, UTM_MAGIC, head)
    (n3,) = _U64.unpack_from(buf, 4)
    if n3 < 1 or len(buf) != head + 16 * n3 * n3:
        raise FormatError(f"payload size does not match n3={n3}")
    mat = np.frombuffer(buf, dtype="<c16", offset=head).reshape(n3, n3).astype(np.complex128)
    t = UnitaryTransform(mat, CUSTOM)
    defect = t.unitarity_defect()
    if defect > tol:
        raise FormatError(f"matrix is not unitary (defect {defect:.3e} > {tol:.0e})")
    return t


def write_transform(path: str | os.PathLike, t: UnitaryTransform) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_transform(t))


def read_transform(path: str | os.PathLike, tol: float = 1e-8) -> UnitaryTransform:
    return decode_transform(_read(path), tol=tol)


def encode_mask(mask: ObservationMask) -> bytes:
    bits = np.packbits(mask.bits.ravel(order="F"), bitorder="little")
    return MSK_MAGIC + _DIMS.pack(*mask.dims) + bits.tobytes()


def decode_mask(buf: bytes) -> ObservationMask:
    head = 4 + _DIMS.size
    _expect(buf, MSK_MAGIC, head)
    dims = _DIMS.unpack_from(buf, 4)
    if min(dims) < 1:
        raise FormatError(f"invalid dims {dims}")
    count = dims[0] * dims[1] * dims[2]
    if len(buf) != head + (count + 7) // 8:
        raise FormatError(f"bitset size does not match dims {dims}")
    flat = np.unpackbits(np.frombuffer(buf, dtype=np.uint8, offset=head), count=count, bitorder="little")
    return ObservationMask(flat.astype(bool).reshape(dims, order="F"))


def write_mask(path: str | os.PathLike, mask: ObservationMask) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_mask(mask))


def read_mask(path: str | os.PathLike) -> ObservationMask:
    return decode_mask(_read(path))
