"""Dense tensor primitives: reshaping, unfoldings, contraction, and rank.

Tensors are plain numpy ``float64`` arrays in C order (row-major, last index
fastest-varying); a d-th-order tensor is a d-dimensional array with every
mode size >= 1.  All mode numbers and element indices in this package are
0-based, so the "second mode" of a tensor is mode 1.

Unfolding conventions are fixed once and used everywhere: whenever several
modes are combined into one matrix axis they are taken in ascending mode
order with the last listed mode fastest-varying, which is exactly what a
C-order reshape produces.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ContractionModeMismatch,
    ElementCountMismatch,
    EmptyOrFullSubset,
    FileFormatError,
    ModeOutOfRange,
    ShapeMismatch,
)

__all__ = [
    "as_tensor",
    "reshape",
    "mode_unfold",
    "t_modes_matricize",
    "contract_n1",
    "matrix_rank",
    "tten_to_bytes",
    "tten_from_bytes",
    "write_tten",
    "read_tten",
]


def as_tensor(x) -> np.ndarray:
    """Coerce ``x`` to a C-contiguous float64 array with all modes >= 1."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim < 1:
        a = a.reshape(1)
    if min(a.shape) < 1:
        raise ShapeMismatch(f"every mode size must be >= 1, got shape {a.shape}")
    return a


def reshape(x, new_shape: Sequence[int]) -> np.ndarray:
    """Reinterpret the flat data of ``x`` under a new shape.

    The flat element order is unchanged (C order on both sides), so this is
    metadata-only whenever numpy can avoid a copy.

    Raises
    ------
    ElementCountMismatch
        If the new shape holds a different number of elements.
    """
    x = as_tensor(x)
    new_shape = tuple(int(n) for n in new_shape)
    if any(n < 1 for n in new_shape):
        raise ShapeMismatch(f"every mode size must be >= 1, got {new_shape}")
    if int(np.prod(new_shape, dtype=np.int64)) != x.size:
        raise ElementCountMismatch(
            f"cannot reshape {x.size} elements into shape {new_shape}"
        )
    return x.reshape(new_shape)


def mode_unfold(x, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding: rows indexed by that mode, columns by the rest.

    The result has shape ``(n_mode, prod of remaining sizes)``; the column
    index runs over the remaining modes in ascending order, last
    fastest-varying.

    Raises
    ------
    ModeOutOfRange
        If ``mode`` is not a valid 0-based mode of ``x``.
    """
    x = as_tensor(x)
    if not 0 <= mode < x.ndim:
        raise ModeOutOfRange(f"mode {mode} out of range for order-{x.ndim} tensor")
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1)


def t_modes_matricize(x, modes: Iterable[int]) -> np.ndarray:
    """Matricize with the given mode subset on the rows, its complement on columns.

    ``modes`` must be a nonempty strict subset of the tensor's 0-based modes.
    Within each side the listed modes combine in ascending order, last
    fastest-varying.

    Raises
    ------
    EmptyOrFullSubset
        If ``modes`` is empty or covers every mode.
    ModeOutOfRange
        If any entry is not a valid mode.
    """
    x = as_tensor(x)
    subset = sorted(set(int(m) for m in modes))
    if any(m < 0 or m >= x.ndim for m in subset):
        raise ModeOutOfRange(f"modes {subset} out of range for order-{x.ndim} tensor")
    if not subset or len(subset) == x.ndim:
        raise EmptyOrFullSubset(
            "mode subset must be nonempty and leave at least one mode out"
        )
    rest = [m for m in range(x.ndim) if m not in subset]
    rows = int(np.prod([x.shape[m] for m in subset], dtype=np.int64))
    return x.transpose(subset + rest).reshape(rows, -1)


def contract_n1(x, y) -> np.ndarray:
    """Contract the last mode of ``x`` with the first mode of ``y``.

    For matrices this is the ordinary matrix product; in general an
    order-N and an order-M tensor give an order-(N+M-2) result.

    Raises
    ------
    ContractionModeMismatch
        If the shared mode sizes differ.
    """
    x = as_tensor(x)
    y = as_tensor(y)
    if x.shape[-1] != y.shape[0]:
        raise ContractionModeMismatch(
            f"last mode of left ({x.shape[-1]}) != first mode of right ({y.shape[0]})"
        )
    return np.tensordot(x, y, axes=(x.ndim - 1, 0))


def matrix_rank(m, rel_tol: float = 1e-9) -> int:
    """Numerical rank: number of singular values above ``rel_tol`` times the largest.

    The zero matrix has rank 0.  The threshold is relative, so the result is
    invariant under rescaling the matrix.
    """
    m = as_tensor(m)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got order-{m.ndim} tensor")
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


# --- binary ".tten" dense tensor format -----------------------------------
#
# magic "TTEN", version 0x01, dtype 0x01 (float64), uint32 LE mode count d,
# d uint64 LE mode sizes, then prod(n_i) little-endian float64 values in
# row-major order.

_TTEN_MAGIC = b"TTEN"
_VERSION = 1
_DTYPE_F64 = 1


def tten_to_bytes(x) -> bytes:
    x = as_tensor(x)
    head = struct.pack("<4sBBI", _TTEN_MAGIC, _VERSION, _DTYPE_F64, x.ndim)
    dims = struct.pack(f"<{x.ndim}Q", *x.shape)
    return head + dims + x.astype("<f8", copy=False).tobytes(order="C")


def tten_from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < 10:
        raise FileFormatError("truncated tensor file")
    magic, version, dtype, d = struct.unpack_from("<4sBBI", buf, 0)
    if magic != _TTEN_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}, expected {_TTEN_MAGIC!r}")
    if version != _VERSION:
        raise FileFormatError(f"unsupported version {version}")
    if dtype != _DTYPE_F64:
        raise FileFormatError(f"unsupported dtype code {dtype}")
    off = 10
    if len(buf) < off + 8 * d:
        raise FileFormatError("truncated shape header")
    shape = struct.unpack_from(f"<{d}Q", buf, off)
    off += 8 * d
    if d < 1 or any(n < 1 for n in shape):
        raise FileFormatError(f"invalid shape {shape}")
    count = int(np.prod(shape, dtype=np.int64))
    if len(buf) != off + 8 * count:
        raise FileFormatError(
            f"payload holds {(len(buf) - off) // 8} values, shape needs {count}"
        )
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=off)
    return data.astype(np.float64).reshape(shape)


def write_tten(path, x) -> None:
    """Write a dense tensor to ``path`` in the .tten binary format."""
    with open(path, "wb") as f:
        f.write(tten_to_bytes(x))


def read_tten(path) -> np.ndarray:
    """Read a dense tensor from a .tten file."""
    with open(path, "rb") as f:
        return tten_from_bytes(f.read())
