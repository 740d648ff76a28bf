"""Index machinery that reshapes matrices and convolution kernels into
TT-ready higher-order tensors.

Matrix tensorizing: factor the dimensions of an M x N matrix as
``M = m_1*...*m_d`` and ``N = n_1*...*n_d``.  Row index ``zeta`` and column
index ``xi`` decompose into little-endian mixed-radix digits (factor 1
fastest): ``digit_k(zeta) = (zeta // (m_1*...*m_{k-1})) % m_k``.  Entry
``(zeta, xi)`` then lands at the order-d tensor index whose k-th component is
the composite ``row_digit_k * n_k + col_digit_k`` (row digit slow).

Kernel tensorizing: flatten the t x h x w filter box of a 3D convolution
kernel to a single index ``p' = w'*h*t + h'*t + t'``, split it as
``p' = l'*u + u'`` over the near-square factor pair ``u*l = t*h*w``, and
pair up channel digits exactly like the matrix case.  The result is a
(d+1)-th-order tensor with leading mode ``u*l`` (composite ``u'*l + l'``)
and channel modes ``c_i*s_i`` (composite ``c'_i*s_i + s'_i``).

2D kernels are the ``t = 1`` special case of the same pipeline; a square
``l x l`` filter factors as ``u = l, l = l``.  All indices are 0-based.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    FactorLengthMismatch,
    FileFormatError,
    IndexOutOfRange,
    LengthMismatch,
    ShapeMismatch,
    SpecMismatch,
)
from .tensor import as_tensor
from .tt import TTTensor, tt_svd, ttcr_from_bytes, ttcr_to_bytes

__all__ = [
    "TensorizeMap",
    "build_matrix_bijection",
    "mixed_radix_digits",
    "tensorize_matrix",
    "detensorize_matrix",
    "TTMatrix",
    "tt_matrix_from_dense",
    "tt_matvec",
    "factor_filter",
    "map_3d_filter_index",
    "Conv3dSpec",
    "tensorize_conv3d_kernel",
    "detensorize_conv3d_kernel",
    "Conv3dTTKernel",
    "conv3d_tt_kernel_from_dense",
    "recover_conv3d_kernel",
    "balanced_factorization",
    "ttk3_to_bytes",
    "ttk3_from_bytes",
    "write_ttk3",
    "read_ttk3",
]


def mixed_radix_digits(index: int, radices: Sequence[int]) -> tuple:
    """Little-endian digits of ``index`` in the given radices (radix 0 fastest)."""
    digits = []
    q = int(index)
    for r in radices:
        digits.append(q % r)
        q //= r
    return tuple(digits)


def _check_factors(factors: Sequence[int], label: str) -> tuple:
    factors = tuple(int(f) for f in factors)
    if not factors:
        raise FactorLengthMismatch(f"{label} factor list is empty")
    if any(f < 1 for f in factors):
        raise FactorLengthMismatch(f"{label} factors must be positive, got {factors}")
    return factors


@dataclass(frozen=True)
class TensorizeMap:
    """Paired factorizations of a matrix's row and column dimensions."""

    row_factors: tuple
    col_factors: tuple

    def __post_init__(self):
        rows = _check_factors(self.row_factors, "row")
        cols = _check_factors(self.col_factors, "column")
        if len(rows) != len(cols):
            raise FactorLengthMismatch(
                f"factor lists differ in length: {len(rows)} vs {len(cols)}"
            )
        object.__setattr__(self, "row_factors", rows)
        object.__setattr__(self, "col_factors", cols)

    @property
    def order(self) -> int:
        return len(self.row_factors)

    @property
    def num_rows(self) -> int:
        return math.prod(self.row_factors)

    @property
    def num_cols(self) -> int:
        return math.prod(self.col_factors)

    @property
    def mode_sizes(self) -> tuple:
        return tuple(m * n for m, n in zip(self.row_factors, self.col_factors))

    def row_digits(self, zeta: int) -> tuple:
        if not 0 <= zeta < self.num_rows:
            raise IndexOutOfRange(f"row index {zeta} out of range [0, {self.num_rows})")
        return mixed_radix_digits(zeta, self.row_factors)

    def col_digits(self, xi: int) -> tuple:
        if not 0 <= xi < self.num_cols:
            raise IndexOutOfRange(f"column index {xi} out of range [0, {self.num_cols})")
        return mixed_radix_digits(xi, self.col_factors)


def build_matrix_bijection(row_factors, col_factors) -> TensorizeMap:
    """Construct the mixed-radix index map for an M x N matrix."""
    return TensorizeMap(tuple(row_factors), tuple(col_factors))


def tensorize_matrix(w, tmap: TensorizeMap) -> np.ndarray:
    """Reshape a matrix into the order-d tensor with composite modes m_k*n_k."""
    w = as_tensor(w)
    if w.ndim != 2 or w.shape != (tmap.num_rows, tmap.num_cols):
        raise ShapeMismatch(
            f"matrix shape {w.shape} does not match map "
            f"({tmap.num_rows} x {tmap.num_cols})"
        )
    d = tmap.order
    # split both axes into little-endian digit axes (slowest digit first in
    # C order), then interleave (row digit, col digit) pairs per mode
    x = w.reshape(tuple(reversed(tmap.row_factors)) + tuple(reversed(tmap.col_factors)))
    perm = []
    for k in range(d):
        perm.append(d - 1 - k)
        perm.append(2 * d - 1 - k)
    return x.transpose(perm).reshape(tmap.mode_sizes)


def detensorize_matrix(x, tmap: TensorizeMap) -> np.ndarray:
    """Exact inverse of :func:`tensorize_matrix`."""
    x = as_tensor(x)
    if x.shape != tmap.mode_sizes:
        raise ShapeMismatch(
            f"tensor shape {x.shape} does not match composite modes {tmap.mode_sizes}"
        )
    d = tmap.order
    pairs = []
    for m, n in zip(tmap.row_factors, tmap.col_factors):
        pairs.extend((m, n))
    x = x.reshape(pairs)
    perm = [2 * (d - 1 - k) for k in range(d)] + [2 * (d - 1 - k) + 1 for k in range(d)]
    return x.transpose(perm).reshape(tmap.num_rows, tmap.num_cols)


@dataclass(frozen=True, eq=False)
class TTMatrix:
    """A matrix held in tensor-train form over composite modes m_k*n_k."""

    tmap: TensorizeMap
    tt: TTTensor

    def __post_init__(self):
        if self.tt.shape != self.tmap.mode_sizes:
            raise ShapeMismatch(
                f"train modes {self.tt.shape} do not match map modes "
                f"{self.tmap.mode_sizes}"
            )

    @property
    def shape(self) -> tuple:
        return (self.tmap.num_rows, self.tmap.num_cols)


def tt_matrix_from_dense(w, tmap: TensorizeMap, max_ranks=None):
    """Tensorize then decompose a dense matrix; returns (TTMatrix, discarded).

    With ``max_ranks=None`` the decomposition is exact.  Maps of order 1
    degenerate to a single core holding the matrix itself.
    """
    x = tensorize_matrix(w, tmap)
    if tmap.order == 1:
        tt = TTTensor([x.reshape(1, x.shape[0], 1)])
        return TTMatrix(tmap, tt), []
    tt, discarded = tt_svd(x, max_ranks)
    return TTMatrix(tmap, tt), discarded


def tt_matvec(wm: TTMatrix, x) -> np.ndarray:
    """Multiply the represented matrix by a vector without rebuilding it.

    Contracts the input through one core at a time, costing
    O(d * r^2 * max(m, n) * max(M, N)) instead of the O(M * N) dense product.

    Raises
    ------
    LengthMismatch
        If ``x`` does not have the matrix's column count.
    """
    x = as_tensor(x).reshape(-1)
    n_cols = wm.tmap.num_cols
    if x.size != n_cols:
        raise LengthMismatch(f"vector length {x.size} != matrix columns {n_cols}")
    ms = wm.tmap.row_factors
    ns = wm.tmap.col_factors
    # buffer holds (link rank, rows produced so far, columns not yet consumed);
    # both composite indices keep digit order little-endian
    buf = x.reshape(1, 1, n_cols)
    rows_done = 1
    for k in range(wm.tmap.order):
        r_in, m_k, n_k = wm.tt.cores[k].shape[0], ms[k], ns[k]
        r_out = wm.tt.cores[k].shape[2]
        core = wm.tt.cores[k].reshape(r_in, m_k, n_k, r_out)
        rest = buf.shape[2] // n_k
        buf = buf.reshape(r_in, rows_done, rest, n_k)
        buf = np.einsum("rabu,rmus->smab", buf, core)
        rows_done *= m_k
        buf = buf.reshape(r_out, rows_done, rest)
    return buf.reshape(rows_done)


def factor_filter(p: int) -> tuple:
    """Split p into the near-square factor pair (u, l), u >= l, u*l = p.

    Searches outward from sqrt(p): start with l = floor(sqrt(p)) and
    u = ceil(sqrt(p)), then repeatedly test u then l for divisibility,
    widening by one on each miss.  A prime p degrades to (p, 1).
    """
    p = int(p)
    if p < 1:
        raise IndexOutOfRange(f"filter volume must be >= 1, got {p}")
    l = math.isqrt(p)
    u = l if l * l == p else l + 1
    while True:
        if p % u == 0:
            l = p // u
            break
        if p % l == 0:
            u = p // l
            break
        l -= 1
        u += 1
    return u, l


def map_3d_filter_index(t_idx, h_idx, w_idx, filter_dims, u, l) -> tuple:
    """Map a (t', h', w') filter position to its (u', l') pair.

    Flattens to ``p' = w'*h*t + h'*t + t'`` and splits as ``p' = l'*u + u'``.
    Accepts scalars or equal-shaped integer arrays (mapped elementwise).

    Raises
    ------
    IndexOutOfRange
        If any index is outside its filter dimension.
    SpecMismatch
        If ``u * l`` is not the filter volume.
    """
    t, h, w = (int(v) for v in filter_dims)
    u, l = int(u), int(l)
    if u * l != t * h * w:
        raise SpecMismatch(f"u*l = {u * l} != filter volume {t * h * w}")
    ti = np.asarray(t_idx, dtype=np.int64)
    hi = np.asarray(h_idx, dtype=np.int64)
    wi = np.asarray(w_idx, dtype=np.int64)
    if (
        np.any(ti < 0) or np.any(ti >= t)
        or np.any(hi < 0) or np.any(hi >= h)
        or np.any(wi < 0) or np.any(wi >= w)
    ):
        raise IndexOutOfRange(
            f"filter index out of range for dims ({t}, {h}, {w})"
        )
    p_idx = wi * (h * t) + hi * t + ti
    u_idx, l_idx = p_idx % u, p_idx // u
    if p_idx.ndim == 0:
        return int(u_idx), int(l_idx)
    return u_idx, l_idx


@dataclass(frozen=True)
class Conv3dSpec:
    """Shape and channel factorization of a 3D convolution kernel."""

    filter_dims: tuple  # (t, h, w)
    in_channels: int
    out_channels: int
    in_factors: tuple
    out_factors: tuple

    def __post_init__(self):
        dims = tuple(int(v) for v in self.filter_dims)
        if len(dims) != 3 or any(v < 1 for v in dims):
            raise SpecMismatch(f"filter dims must be three positive ints, got {dims}")
        cf = _check_factors(self.in_factors, "input-channel")
        sf = _check_factors(self.out_factors, "output-channel")
        if len(cf) != len(sf):
            raise FactorLengthMismatch(
                f"channel factor lists differ in length: {len(cf)} vs {len(sf)}"
            )
        if math.prod(cf) != int(self.in_channels):
            raise SpecMismatch(
                f"input factors {cf} multiply to {math.prod(cf)}, "
                f"not {self.in_channels}"
            )
        if math.prod(sf) != int(self.out_channels):
            raise SpecMismatch(
                f"output factors {sf} multiply to {math.prod(sf)}, "
                f"not {self.out_channels}"
            )
        object.__setattr__(self, "filter_dims", dims)
        object.__setattr__(self, "in_channels", int(self.in_channels))
        object.__setattr__(self, "out_channels", int(self.out_channels))
        object.__setattr__(self, "in_factors", cf)
        object.__setattr__(self, "out_factors", sf)

    @property
    def order(self) -> int:
        return len(self.in_factors)

    @property
    def filter_volume(self) -> int:
        return math.prod(self.filter_dims)

    @property
    def filter_factors(self) -> tuple:
        return factor_filter(self.filter_volume)

    @property
    def kernel_shape(self) -> tuple:
        return self.filter_dims + (self.in_channels, self.out_channels)

    @property
    def mode_sizes(self) -> tuple:
        """Tensorized shape: (u*l, c_1*s_1, ..., c_d*s_d)."""
        return (self.filter_volume,) + tuple(
            c * s for c, s in zip(self.in_factors, self.out_factors)
        )


def tensorize_conv3d_kernel(k, spec: Conv3dSpec) -> np.ndarray:
    """Reshape a (t, h, w, C, S) kernel into its (d+1)-th-order TT-ready form."""
    k = as_tensor(k)
    if k.shape != spec.kernel_shape:
        raise SpecMismatch(
            f"kernel shape {k.shape} does not match spec {spec.kernel_shape}"
        )
    t, h, w = spec.filter_dims
    c_in, s_out = spec.in_channels, spec.out_channels
    u, l = spec.filter_factors
    d = spec.order
    # flatten the filter box to p' = w'*h*t + h'*t + t' (t' fastest) ...
    x = k.transpose(2, 1, 0, 3, 4).reshape(t * h * w, c_in, s_out)
    # ... split p' = l'*u + u', composite leading index u'*l + l' (u' slow)
    x = x.reshape(l, u, c_in, s_out).transpose(1, 0, 2, 3).reshape(u * l, c_in, s_out)
    # pair channel digits per mode, input digit slow
    x = x.reshape(
        (u * l,) + tuple(reversed(spec.in_factors)) + tuple(reversed(spec.out_factors))
    )
    perm = [0]
    for i in range(d):
        perm.append(1 + (d - 1 - i))
        perm.append(1 + d + (d - 1 - i))
    return x.transpose(perm).reshape(spec.mode_sizes)


def detensorize_conv3d_kernel(x, spec: Conv3dSpec) -> np.ndarray:
    """Exact inverse of :func:`tensorize_conv3d_kernel`."""
    x = as_tensor(x)
    if x.shape != spec.mode_sizes:
        raise SpecMismatch(
            f"tensor shape {x.shape} does not match spec modes {spec.mode_sizes}"
        )
    t, h, w = spec.filter_dims
    c_in, s_out = spec.in_channels, spec.out_channels
    u, l = spec.filter_factors
    d = spec.order
    pairs = [u * l]
    for c, s in zip(spec.in_factors, spec.out_factors):
        pairs.extend((c, s))
    x = x.reshape(pairs)
    perm = [0]
    perm += [1 + 2 * (d - 1 - i) for i in range(d)]
    perm += [2 + 2 * (d - 1 - i) for i in range(d)]
    x = x.transpose(perm).reshape(u * l, c_in, s_out)
    x = x.reshape(u, l, c_in, s_out).transpose(1, 0, 2, 3).reshape(t * h * w, c_in, s_out)
    return x.reshape(w, h, t, c_in, s_out).transpose(2, 1, 0, 3, 4)


@dataclass(frozen=True, eq=False)
class Conv3dTTKernel:
    """TT-compressed 3D convolution kernel.

    ``leading`` is the (u*l) x r_1 filter factor; ``cores`` holds d-1
    middle cores of shape (r_i, c_i*s_i, r_{i+1}) followed by the last core
    of shape (r_d, c_d*s_d).
    """

    spec: Conv3dSpec
    leading: np.ndarray
    cores: tuple

    def __post_init__(self):
        leading = as_tensor(self.leading)
        cores = tuple(as_tensor(c) for c in self.cores)
        d = self.spec.order
        u, l = self.spec.filter_factors
        if leading.ndim != 2 or leading.shape[0] != u * l:
            raise ShapeMismatch(
                f"leading factor must be ({u * l} x r_1), got {leading.shape}"
            )
        if len(cores) != d:
            raise ShapeMismatch(f"expected {d} channel cores, got {len(cores)}")
        modes = self.spec.mode_sizes[1:]
        r = leading.shape[1]
        for i, core in enumerate(cores[:-1]):
            if core.ndim != 3 or core.shape[0] != r or core.shape[1] != modes[i]:
                raise ShapeMismatch(
                    f"core {i} must be ({r} x {modes[i]} x r), got {core.shape}"
                )
            r = core.shape[2]
        last = cores[-1]
        if last.ndim != 2 or last.shape != (r, modes[-1]):
            raise ShapeMismatch(
                f"last core must be ({r} x {modes[-1]}), got {last.shape}"
            )
        object.__setattr__(self, "leading", leading)
        object.__setattr__(self, "cores", cores)

    @property
    def ranks(self) -> tuple:
        """Link ranks (r_1, ..., r_d)."""
        out = [self.leading.shape[1]]
        out += [c.shape[2] for c in self.cores[:-1]]
        return tuple(out)

    def as_tt(self) -> TTTensor:
        """View the chain as a plain train over (u*l, c_1*s_1, ..., c_d*s_d)."""
        ul, r1 = self.leading.shape
        cores = [self.leading.reshape(1, ul, r1)]
        cores.extend(self.cores[:-1])
        rd, mode = self.cores[-1].shape
        cores.append(self.cores[-1].reshape(rd, mode, 1))
        return TTTensor(cores)


def _kernel_from_tt(spec: Conv3dSpec, tt: TTTensor) -> Conv3dTTKernel:
    if tt.shape != spec.mode_sizes:
        raise SpecMismatch(
            f"train modes {tt.shape} do not match spec modes {spec.mode_sizes}"
        )
    first = tt.cores[0]
    leading = first.reshape(first.shape[1], first.shape[2])
    mids = list(tt.cores[1:-1])
    last3 = tt.cores[-1]
    if len(tt.cores) == 1:
        raise SpecMismatch("kernel train needs a leading core plus channel cores")
    last = last3.reshape(last3.shape[0], last3.shape[1])
    return Conv3dTTKernel(spec, leading, tuple(mids) + (last,))


def conv3d_tt_kernel_from_dense(k, spec: Conv3dSpec, max_ranks=None):
    """Tensorize and decompose a dense kernel; returns (Conv3dTTKernel, discarded).

    ``max_ranks`` caps the d link ranks (r_1, ..., r_d); None keeps the
    decomposition exact.
    """
    x = tensorize_conv3d_kernel(k, spec)
    tt, discarded = tt_svd(x, max_ranks)
    return _kernel_from_tt(spec, tt), discarded


def recover_conv3d_kernel(tk: Conv3dTTKernel) -> np.ndarray:
    """Contract the chain and undo the tensorizing reshapes; returns (t,h,w,C,S)."""
    from .tensor import contract_n1

    full = tk.leading
    for core in tk.cores:
        full = contract_n1(full, core)
    return detensorize_conv3d_kernel(full, tk.spec)


def balanced_factorization(n: int, d: int) -> tuple:
    """Split n into d near-equal factors.

    Prime factors are assigned largest-first to the bucket with the smallest
    running product (first such bucket on ties), so the result is
    deterministic.  Buckets that receive nothing stay 1.
    """
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise FactorLengthMismatch(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    primes = []
    q = n
    f = 2
    while f * f <= q:
        while q % f == 0:
            primes.append(f)
            q //= f
        f += 1
    if q > 1:
        primes.append(q)
    buckets = [1] * d
    for p in sorted(primes, reverse=True):
        i = min(range(d), key=lambda j: buckets[j])
        buckets[i] *= p
    return tuple(buckets)


# --- binary ".ttk3" kernel format -------------------------------------------
#
# magic "TTK3", version 0x01, then a 64-byte block of eight uint64 LE fields
# t, h, w, u, l, C, S, d, then the d input-channel factors and d
# output-channel factors as uint64 LE, followed by the chain serialized in
# the .ttcr format (d+1 cores over modes u*l, c_1*s_1, ..., c_d*s_d).

_TTK3_MAGIC = b"TTK3"
_TTK3_VERSION = 1


def ttk3_to_bytes(tk: Conv3dTTKernel) -> bytes:
    spec = tk.spec
    t, h, w = spec.filter_dims
    u, l = spec.filter_factors
    d = spec.order
    head = struct.pack("<4sB", _TTK3_MAGIC, _TTK3_VERSION)
    head += struct.pack("<8Q", t, h, w, u, l, spec.in_channels, spec.out_channels, d)
    head += struct.pack(f"<{d}Q", *spec.in_factors)
    head += struct.pack(f"<{d}Q", *spec.out_factors)
    return head + ttcr_to_bytes(tk.as_tt())


def ttk3_from_bytes(buf: bytes) -> Conv3dTTKernel:
    if len(buf) < 5 + 64:
        raise FileFormatError("truncated kernel file")
    magic, version = struct.unpack_from("<4sB", buf, 0)
    if magic != _TTK3_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}, expected {_TTK3_MAGIC!r}")
    if version != _TTK3_VERSION:
        raise FileFormatError(f"unsupported version {version}")
    t, h, w, u, l, c_in, s_out, d = struct.unpack_from("<8Q", buf, 5)
    off = 5 + 64
    if len(buf) < off + 16 * d:
        raise FileFormatError("truncated channel factor lists")
    in_factors = struct.unpack_from(f"<{d}Q", buf, off)
    off += 8 * d
    out_factors = struct.unpack_from(f"<{d}Q", buf, off)
    off += 8 * d
    try:
        spec = Conv3dSpec((t, h, w), c_in, s_out, in_factors, out_factors)
    except SpecMismatch as exc:
        raise FileFormatError(f"inconsistent kernel header: {exc}") from exc
    if (u, l) != spec.filter_factors:
        raise FileFormatError(
            f"stored filter factors ({u}, {l}) != derived {spec.filter_factors}"
        )
    tt = ttcr_from_bytes(buf[off:])
    try:
        return _kernel_from_tt(spec, tt)
    except SpecMismatch as exc:
        raise FileFormatError(f"inconsistent kernel payload: {exc}") from exc


def write_ttk3(path, tk: Conv3dTTKernel) -> None:
    """Write a TT kernel to ``path`` in the .ttk3 binary format."""
    with open(path, "wb") as f:
        f.write(ttk3_to_bytes(tk))


def read_ttk3(path) -> Conv3dTTKernel:
    """Read a TT kernel from a .ttk3 file."""
    with open(path, "rb") as f:
        return ttk3_from_bytes(f.read())
