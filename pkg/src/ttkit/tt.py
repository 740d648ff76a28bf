"""Tensor-train representation: evaluation, reconstruction, and decomposition.

A tensor train stores a d-th-order tensor as a chain of 3rd-order cores.
Core k has shape ``(r_k, n_k, r_{k+1})`` with unit boundary ranks
``r_0 = r_d = 1``; the element at index ``(j_0, ..., j_{d-1})`` is the product
of the per-index core slices, a 1x1 matrix.  Fixing index ``j_k`` on core k
selects the slice ``cores[k][:, j_k, :]``.
"""

from __future__ import annotations

import struct
from typing import Sequence

import numpy as np

from .errors import (
    FileFormatError,
    IndexOutOfRange,
    OrderTooLow,
    RankLengthMismatch,
    ShapeMismatch,
)
from .tensor import as_tensor, contract_n1

__all__ = [
    "TTTensor",
    "tt_element",
    "tt_reconstruct",
    "tt_svd",
    "tt_param_count",
    "random_tt",
    "max_tt_ranks",
    "ttcr_to_bytes",
    "ttcr_from_bytes",
    "write_ttcr",
    "read_ttcr",
]


class TTTensor:
    """Immutable chain of 3rd-order cores with matching link ranks."""

    __slots__ = ("cores",)

    def __init__(self, cores: Sequence[np.ndarray]):
        cores = [as_tensor(c) for c in cores]
        if not cores:
            raise ShapeMismatch("a tensor train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ShapeMismatch(
                    f"core {k} must be 3rd-order, got order {c.ndim}"
                )
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ShapeMismatch("boundary ranks must both equal 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ShapeMismatch(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{cores[k].shape[2]} vs {cores[k + 1].shape[0]}"
                )
        object.__setattr__(self, "cores", tuple(cores))

    def __setattr__(self, name, value):
        raise AttributeError("TTTensor is immutable")

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def shape(self) -> tuple:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple:
        """Full rank vector ``(r_0, ..., r_d)`` including the unit boundaries."""
        return (1,) + tuple(c.shape[2] for c in self.cores)

    def __repr__(self) -> str:
        return f"TTTensor(shape={self.shape}, ranks={self.ranks})"


def tt_element(t: TTTensor, idx: Sequence[int]) -> float:
    """Evaluate one element by multiplying the per-index core slices.

    Raises
    ------
    IndexOutOfRange
        If ``idx`` has the wrong length or any entry is outside its mode.
    """
    idx = tuple(int(i) for i in idx)
    if len(idx) != t.order:
        raise IndexOutOfRange(
            f"index has {len(idx)} entries for an order-{t.order} tensor"
        )
    for k, (i, n) in enumerate(zip(idx, t.shape)):
        if not 0 <= i < n:
            raise IndexOutOfRange(f"index {i} out of range for mode {k} of size {n}")
    v = t.cores[0][:, idx[0], :]
    for k in range(1, t.order):
        v = v @ t.cores[k][:, idx[k], :]
    return float(v[0, 0])


def tt_reconstruct(t: TTTensor) -> np.ndarray:
    """Rebuild the full dense tensor by chaining last-with-first contractions."""
    full = t.cores[0]
    for core in t.cores[1:]:
        full = contract_n1(full, core)
    # drop the two unit boundary modes
    return full.reshape(t.shape)


def tt_svd(x, max_ranks: Sequence[int] | None = None):
    """Sequential-SVD decomposition with optional rank caps.

    Sweeps left to right: at step k the remainder is unfolded with the modes
    processed so far on the rows, truncated to at most ``max_ranks[k]``
    singular values, and the discarded tail's Frobenius mass is recorded.

    Parameters
    ----------
    x : array_like
        Dense tensor of order >= 2.
    max_ranks : sequence of d-1 positive ints, or None
        Per-link rank caps; None means no truncation (exact ranks).

    Returns
    -------
    (TTTensor, list of float)
        The train and the d-1 per-step discarded norms
        ``sqrt(sum of squared truncated singular values)``.  The total
        reconstruction error satisfies
        ``||x - rebuild||_F <= sqrt(sum(discarded**2))``.

    Raises
    ------
    OrderTooLow
        If ``x`` has fewer than two modes.
    RankLengthMismatch
        If ``max_ranks`` does not have d-1 entries, or a cap is < 1.
    """
    x = as_tensor(x)
    d = x.ndim
    if d < 2:
        raise OrderTooLow(f"tt_svd needs order >= 2, got {d}")
    if max_ranks is None:
        caps = [min(x.size, np.iinfo(np.int64).max)] * (d - 1)
    else:
        caps = [int(r) for r in max_ranks]
        if len(caps) != d - 1:
            raise RankLengthMismatch(
                f"expected {d - 1} rank caps for an order-{d} tensor, got {len(caps)}"
            )
        if any(r < 1 for r in caps):
            raise RankLengthMismatch(f"rank caps must be >= 1, got {caps}")

    cores = []
    discarded = []
    rest = x.reshape(x.shape[0], -1)
    r_prev = 1
    for k in range(d - 1):
        u, s, vt = np.linalg.svd(rest, full_matrices=False)
        r = min(caps[k], s.size)
        discarded.append(float(np.sqrt(np.sum(s[r:] ** 2))))
        cores.append(u[:, :r].reshape(r_prev, x.shape[k], r))
        rest = (s[:r, None] * vt[:r]).reshape(r * x.shape[k + 1], -1)
        r_prev = r
    cores.append(rest.reshape(r_prev, x.shape[-1], 1))
    return TTTensor(cores), discarded


def tt_param_count(t: TTTensor) -> int:
    """Total number of stored scalars, ``sum_k r_k * n_k * r_{k+1}``."""
    return int(sum(c.size for c in t.cores))


def max_tt_ranks(shape: Sequence[int]) -> tuple:
    """Largest attainable link ranks ``min(prod left, prod right)`` per split."""
    shape = [int(n) for n in shape]
    lefts = np.cumprod(shape[:-1], dtype=np.int64)
    rights = np.cumprod(shape[:0:-1], dtype=np.int64)[::-1]
    return tuple(int(min(l, r)) for l, r in zip(lefts, rights))


def random_tt(shape: Sequence[int], ranks: Sequence[int], rng: np.random.Generator) -> TTTensor:
    """Random train with the given shape and link ranks (clipped to validity).

    Cores are scaled standard normals so element magnitudes stay O(1).
    """
    shape = [int(n) for n in shape]
    bounds = max_tt_ranks(shape)
    links = [min(int(r), b) for r, b in zip(ranks, bounds)]
    full = [1] + links + [1]
    cores = []
    for k, n in enumerate(shape):
        c = rng.standard_normal((full[k], n, full[k + 1]))
        cores.append(c / np.sqrt(full[k]))
    return TTTensor(cores)


# --- binary ".ttcr" tensor-train format ------------------------------------
#
# magic "TTCR", version 0x01, dtype 0x01 (float64), uint32 LE core count d,
# d+1 uint64 LE ranks, d uint64 LE mode sizes, then the cores in order, each
# row-major float64 LE with shape (r_k, n_k, r_{k+1}).

_TTCR_MAGIC = b"TTCR"
_VERSION = 1
_DTYPE_F64 = 1


def ttcr_to_bytes(t: TTTensor) -> bytes:
    d = t.order
    parts = [struct.pack("<4sBBI", _TTCR_MAGIC, _VERSION, _DTYPE_F64, d)]
    parts.append(struct.pack(f"<{d + 1}Q", *t.ranks))
    parts.append(struct.pack(f"<{d}Q", *t.shape))
    for c in t.cores:
        parts.append(c.astype("<f8", copy=False).tobytes(order="C"))
    return b"".join(parts)


def ttcr_from_bytes(buf: bytes) -> TTTensor:
    if len(buf) < 10:
        raise FileFormatError("truncated tensor-train file")
    magic, version, dtype, d = struct.unpack_from("<4sBBI", buf, 0)
    if magic != _TTCR_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}, expected {_TTCR_MAGIC!r}")
    if version != _VERSION:
        raise FileFormatError(f"unsupported version {version}")
    if dtype != _DTYPE_F64:
        raise FileFormatError(f"unsupported dtype code {dtype}")
    if d < 1:
        raise FileFormatError("core count must be >= 1")
    off = 10
    need = 8 * (2 * d + 1)
    if len(buf) < off + need:
        raise FileFormatError("truncated rank/shape header")
    ranks = struct.unpack_from(f"<{d + 1}Q", buf, off)
    off += 8 * (d + 1)
    shape = struct.unpack_from(f"<{d}Q", buf, off)
    off += 8 * d
    if ranks[0] != 1 or ranks[-1] != 1:
        raise FileFormatError(f"boundary ranks must be 1, got {ranks}")
    if any(r < 1 for r in ranks) or any(n < 1 for n in shape):
        raise FileFormatError("ranks and mode sizes must be positive")
    cores = []
    for k in range(d):
        count = ranks[k] * shape[k] * ranks[k + 1]
        if len(buf) < off + 8 * count:
            raise FileFormatError(f"truncated core {k}")
        data = np.frombuffer(buf, dtype="<f8", count=count, offset=off)
        cores.append(data.astype(np.float64).reshape(ranks[k], shape[k], ranks[k + 1]))
        off += 8 * count
    if off != len(buf):
        raise FileFormatError(f"{len(buf) - off} trailing bytes after last core")
    return TTTensor(cores)


def write_ttcr(path, t: TTTensor) -> None:
    """Write a tensor train to ``path`` in the .ttcr binary format."""
    with open(path, "wb") as f:
        f.write(ttcr_to_bytes(t))


def read_ttcr(path) -> TTTensor:
    """Read a tensor train from a .ttcr file."""
    with open(path, "rb") as f:
        return ttcr_from_bytes(f.read())
