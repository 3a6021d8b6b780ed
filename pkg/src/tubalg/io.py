"""TBT1 tensor files, transform files and builtin transform names.

TBT1 layout::

    bytes 0-3    magic b"TBT1"
    bytes 4-27   m, p, n as little-endian uint64
    byte  28     0 = real float64 values, 1 = complex (re, im) float64 pairs
    bytes 29-    values, i fastest, then j, then k
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .exceptions import FileFormatError, TbtFormatError
from .tensor import Tensor3
from .transform import Transform, build_transform, dct, dft, identity, random_valid

MAGIC = b"TBT1"
_HEADER = struct.Struct("<4sQQQB")


def encode_tbt(x: Tensor3, force_complex: bool = False) -> bytes:
    vals = x.values
    is_complex = force_complex or bool(np.any(vals.imag))
    m, p, n = vals.shape
    head = _HEADER.pack(MAGIC, m, p, n, int(is_complex))
    flat = vals.ravel(order="F")
    if is_complex:
        body = np.column_stack([flat.real, flat.imag]).astype("<f8").tobytes()
    else:
        body = flat.real.astype("<f8").tobytes()
    return head + body


def decode_tbt(data: bytes) -> Tensor3:
    if len(data) < 4 or data[:4] != MAGIC:
        raise TbtFormatError("bad magic, expected b'TBT1'", offset=0)
    if len(data) < _HEADER.size:
        raise TbtFormatError("truncated header", offset=len(data))
    _, m, p, n, flag = _HEADER.unpack_from(data)
    if flag not in (0, 1):
        raise TbtFormatError(f"unknown domain flag {flag}", offset=28)
    if m < 1 or n < 1:
        raise TbtFormatError(f"invalid dimensions ({m}, {p}, {n})", offset=4)
    count = m * p * n * (2 if flag else 1)
    expected = _HEADER.size + 8 * count
    if len(data) < expected:
        raise TbtFormatError(f"payload truncated: need {expected} bytes, have {len(data)}", offset=len(data))
    if len(data) > expected:
        raise TbtFormatError(f"{len(data) - expected} trailing bytes", offset=expected)
    raw = np.frombuffer(data, dtype="<f8", count=count, offset=_HEADER.size)
    if flag:
        raw = raw[0::2] + 1j * raw[1::2]
    bad = np.flatnonzero(~np.isfinite(raw))
    if bad.size:
        step = 16 if flag else 8
        raise TbtFormatError("non-finite value", offset=_HEADER.size + step * int(bad[0]))
    return Tensor3(raw.reshape((m, p, n), order="F"))


def write_tbt(path, x: Tensor3, force_complex: bool = False) -> None:
    Path(path).write_bytes(encode_tbt(x, force_complex))


def read_tbt(path) -> Tensor3:
    return decode_tbt(Path(path).read_bytes())


_BUILTINS = {
    "identity": identity,
    "dft": dft,
    "dct": dct,
}


def parse_builtin(name: str) -> Transform:
    """``builtin:dct:N``, ``builtin:dft:N``, ``builtin:identity:N`` or ``builtin:random_valid:N[:SEED]``."""
    parts = name.split(":")
    if len(parts) < 3 or parts[0] != "builtin":
        raise ValueError(f"malformed builtin transform {name!r}")
    kind, args = parts[1], parts[2:]
    try:
        ints = [int(a) for a in args]
    except ValueError:
        raise ValueError(f"malformed builtin transform {name!r}") from None
    if kind == "random_valid" and len(ints) in (1, 2):
        return random_valid(*ints)
    if kind in _BUILTINS and len(ints) == 1:
        return _BUILTINS[kind](ints[0])
    raise ValueError(f"unknown builtin transform {name!r}")


def read_transform_matrix(path) -> np.ndarray:
    """Load an ``n x n`` complex matrix from a TBT1 file (``n x n x 1``) or interleaved CSV."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        x = decode_tbt(data)
        m, p, n = x.dims
        if m != p or n != 1:
            raise TbtFormatError(f"transform file must be n x n x 1, got {x.dims}", offset=4)
        return x.values[:, :, 0]
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise FileFormatError(f"{path}: cannot parse transform CSV ({exc})") from None
    n = raw.shape[0]
    if raw.shape[1] != 2 * n:
        raise FileFormatError(f"{path}: expected {2 * n} columns (re,im interleaved), got {raw.shape[1]}")
    return raw[:, 0::2] + 1j * raw[:, 1::2]


def load_transform(spec: str, tol: float = 1e-10) -> Transform:
    if spec.startswith("builtin:"):
        return parse_builtin(spec)
    return build_transform(read_transform_matrix(spec), tol)


def write_transform_csv(path, mat) -> None:
    mat = np.asarray(mat, dtype=np.complex128)
    out = np.empty((mat.shape[0], 2 * mat.shape[1]))
    out[:, 0::2], out[:, 1::2] = mat.real, mat.imag
    np.savetxt(path, out, delimiter=",", fmt="%.17g")


def write_transform_tbt(path, mat) -> None:
    write_tbt(path, Tensor3(np.asarray(mat)[:, :, None]), force_complex=True)
