"""Compression accounting: parameter counts, ratio bounds, rank selection
rules, FLOP estimates, and whole-architecture reports.

Parameter counts are weight-only (no bias terms) throughout, and pooling /
activation layers carry zero parameters; they can still appear in an
architecture so configs mirror real networks layer for layer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, OrderTooLow, RankLengthMismatch
from .tensorize import Conv3dSpec, factor_filter

__all__ = [
    "RatioReport",
    "conv3d_tt_params",
    "linear_tt_params",
    "compression_ratio",
    "suggest_ranks_degenerate",
    "suggest_ranks_modewise",
    "suggest_uniform_rank",
    "flops_conv3d",
    "TTLayerConfig",
    "LayerSpec",
    "ArchitectureSpec",
    "LayerCount",
    "CompressionReport",
    "count_params",
    "architecture_from_dict",
    "load_architecture",
    "render_report_text",
    "report_to_json",
]


# --- per-layer counting and ratio bounds ------------------------------------


@dataclass(frozen=True)
class RatioReport:
    """Compression ratio of one TT conv kernel together with its rank bounds.

    ``bound_upper`` is the ratio attained if every link used the smallest
    rank in the vector; ``bound_lower`` the same for the largest.  The actual
    ratio always lies between them, with all three equal for uniform ranks.
    """

    original_params: int
    tt_params: int
    ratio: float
    bound_upper: float
    bound_lower: float


def _check_ranks(ranks: Sequence[int], d: int) -> tuple:
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != d:
        raise RankLengthMismatch(f"expected {d} ranks, got {len(ranks)}")
    if any(r < 1 for r in ranks):
        raise RankLengthMismatch(f"ranks must be >= 1, got {ranks}")
    return ranks


def conv3d_tt_params(spec: Conv3dSpec, ranks: Sequence[int]) -> int:
    """Stored scalars of the TT kernel: u*l*r_1 + sum c_i*s_i*r_i*r_{i+1} + c_d*s_d*r_d."""
    d = spec.order
    ranks = _check_ranks(ranks, d)
    u, l = spec.filter_factors
    modes = spec.mode_sizes[1:]
    total = u * l * ranks[0]
    for i in range(d - 1):
        total += modes[i] * ranks[i] * ranks[i + 1]
    total += modes[-1] * ranks[-1]
    return total


def linear_tt_params(in_factors, out_factors, ranks: Sequence[int]) -> int:
    """Stored scalars of a TT matrix: sum_k r_{k-1} * m_k*n_k * r_k, boundaries 1."""
    in_factors = tuple(int(f) for f in in_factors)
    out_factors = tuple(int(f) for f in out_factors)
    d = len(in_factors)
    if len(out_factors) != d:
        raise RankLengthMismatch("factor lists differ in length")
    ranks = _check_ranks(ranks, d - 1) if d > 1 else _check_ranks(ranks, 0)
    full = (1,) + ranks + (1,)
    return sum(
        full[k] * in_factors[k] * out_factors[k] * full[k + 1] for k in range(d)
    )


def compression_ratio(spec: Conv3dSpec, ranks: Sequence[int]) -> RatioReport:
    """Ratio of dense to TT parameter counts plus its extreme-rank bounds."""
    d = spec.order
    ranks = _check_ranks(ranks, d)
    u, l = spec.filter_factors
    modes = spec.mode_sizes[1:]
    dense = u * l * math.prod(modes)
    tt = conv3d_tt_params(spec, ranks)

    def bound(r: int) -> float:
        return dense / (r * (u * l + r * sum(modes[:-1]) + modes[-1]))

    return RatioReport(
        original_params=dense,
        tt_params=tt,
        ratio=dense / tt,
        bound_upper=bound(min(ranks)),
        bound_lower=bound(max(ranks)),
    )


# --- rank selection rules ----------------------------------------------------


def suggest_ranks_degenerate(shape: Sequence[int]) -> tuple:
    """Full link ranks of the one-mode-at-a-time splitting sequence.

    For a generic tensor the rank of the split-after-mode-q matricization is
    ``min(prod of first q+1 sizes, prod of the rest)``; these are the largest
    link ranks an exact train can need.
    """
    shape = tuple(int(n) for n in shape)
    if len(shape) < 2:
        raise OrderTooLow(f"need at least 2 modes, got {len(shape)}")
    out = []
    left = 1
    total = math.prod(shape)
    for n in shape[:-1]:
        left *= n
        out.append(min(left, total // left))
    return tuple(out)


def suggest_ranks_modewise(shape: Sequence[int]) -> tuple:
    """Per-mode full ranks ``min(n_i, prod of the other sizes)``."""
    shape = tuple(int(n) for n in shape)
    if len(shape) < 2:
        raise OrderTooLow(f"need at least 2 modes, got {len(shape)}")
    total = math.prod(shape)
    return tuple(min(n, total // n) for n in shape)


def suggest_uniform_rank(shape: Sequence[int], heuristic: str = "min_channel") -> int:
    """Single rank to use on every link of a truncated train.

    ``min_channel`` takes the smallest modewise full rank over all modes but
    the first (the filter mode); ``most_frequent`` takes the most common
    modewise full rank over all modes, ties to the smaller value.
    """
    modewise = suggest_ranks_modewise(shape)
    if heuristic == "min_channel":
        return min(modewise[1:])
    if heuristic == "most_frequent":
        counts = {}
        for r in modewise:
            counts[r] = counts.get(r, 0) + 1
        best = max(counts.values())
        return min(r for r, c in counts.items() if c == best)
    raise ConfigError(f"unknown rank heuristic {heuristic!r}")


# --- FLOP estimates -----------------------------------------------------------


def flops_conv3d(spec: Conv3dSpec, ranks: Sequence[int], input_dims) -> tuple:
    """Estimated work of one SAME-padded convolution, dense and TT overhead.

    Returns ``(dense, overhead)`` where dense is W*H*T*C*S*(w*h*t + 1) and
    overhead is the one-off cost of rebuilding the kernel from its train,
    ``w*h*t*C*S*(r + sum_i r^2 / (c*s)^i)`` with r the largest rank and c, s
    the geometric-mean channel factors.  Estimates, not exact op counts.
    """
    d = spec.order
    ranks = _check_ranks(ranks, d)
    dim_t, dim_h, dim_w = (int(v) for v in input_dims)
    t, h, w = spec.filter_dims
    c_tot, s_tot = spec.in_channels, spec.out_channels
    dense = float(dim_w * dim_h * dim_t * c_tot * s_tot * (w * h * t + 1))
    r = max(ranks)
    c_geo = c_tot ** (1.0 / d)
    s_geo = s_tot ** (1.0 / d)
    series = sum(r * r / (c_geo * s_geo) ** i for i in range(1, d))
    overhead = float(w * h * t * c_tot * s_tot * (r + series))
    return dense, overhead


# --- architecture configs and whole-network counting -------------------------

_KINDS = ("conv3d", "conv2d", "linear", "pool")
_AUTO_RANKS = {"auto-min": "min_channel", "auto-frequent": "most_frequent"}


@dataclass(frozen=True)
class TTLayerConfig:
    """Factorizations and link ranks for one TT-compressed layer.

    ``ranks`` is either an explicit tuple or one of the strings "auto-min" /
    "auto-frequent", resolved against the layer's tensorized shape when
    counting.
    """

    in_factors: tuple
    out_factors: tuple
    ranks: object

    def __post_init__(self):
        object.__setattr__(self, "in_factors", tuple(int(f) for f in self.in_factors))
        object.__setattr__(self, "out_factors", tuple(int(f) for f in self.out_factors))
        if not isinstance(self.ranks, str):
            object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))


@dataclass(frozen=True)
class LayerSpec:
    """One layer of an architecture; pool layers carry no parameters."""

    kind: str
    filter_dims: tuple | None = None
    in_dim: int | None = None
    out_dim: int | None = None
    tt: TTLayerConfig | None = None


@dataclass(frozen=True)
class ArchitectureSpec:
    """Named, ordered list of layers."""

    name: str
    layers: tuple

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("architecture must contain at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class LayerCount:
    index: int
    kind: str
    original: int
    compressed: int


@dataclass(frozen=True)
class CompressionReport:
    """Per-layer and total parameter counts of one architecture."""

    name: str
    layers: tuple
    conv_original: int
    conv_tt: int
    whole_original: int
    whole_tt: int

    @property
    def ratio(self) -> float:
        if self.whole_tt == 0:
            return 1.0 if self.whole_original == 0 else math.inf
        return self.whole_original / self.whole_tt


def _conv_spec_for_layer(layer: LayerSpec) -> Conv3dSpec:
    dims = layer.filter_dims
    if layer.kind == "conv2d":
        dims = (1,) + tuple(dims)
    return Conv3dSpec(
        dims, layer.in_dim, layer.out_dim, layer.tt.in_factors, layer.tt.out_factors
    )


def _resolve_ranks(tt: TTLayerConfig, shape: Sequence[int], count: int) -> tuple:
    if isinstance(tt.ranks, str):
        heuristic = _AUTO_RANKS.get(tt.ranks)
        if heuristic is None:
            raise ConfigError(f"unknown auto rank mode {tt.ranks!r}")
        return (suggest_uniform_rank(shape, heuristic),) * count
    return tt.ranks


def _layer_counts(index: int, layer: LayerSpec) -> LayerCount:
    if layer.kind == "pool":
        return LayerCount(index, layer.kind, 0, 0)
    if layer.kind in ("conv3d", "conv2d"):
        dims = layer.filter_dims if layer.kind == "conv3d" else (1,) + tuple(layer.filter_dims)
        original = math.prod(dims) * layer.in_dim * layer.out_dim
        if layer.tt is None:
            return LayerCount(index, layer.kind, original, original)
        spec = _conv_spec_for_layer(layer)
        ranks = _resolve_ranks(layer.tt, spec.mode_sizes, spec.order)
        return LayerCount(index, layer.kind, original, conv3d_tt_params(spec, ranks))
    # linear
    original = layer.in_dim * layer.out_dim
    if layer.tt is None:
        return LayerCount(index, layer.kind, original, original)
    modes = tuple(m * n for m, n in zip(layer.tt.in_factors, layer.tt.out_factors))
    ranks = _resolve_ranks(layer.tt, modes, len(modes) - 1)
    return LayerCount(
        index,
        layer.kind,
        original,
        linear_tt_params(layer.tt.in_factors, layer.tt.out_factors, ranks),
    )


def count_params(arch: ArchitectureSpec) -> CompressionReport:
    """Count original and compressed parameters per layer and in total."""
    rows = [_layer_counts(i, layer) for i, layer in enumerate(arch.layers)]
    conv_rows = [r for r in rows if r.kind in ("conv3d", "conv2d")]
    return CompressionReport(
        name=arch.name,
        layers=tuple(rows),
        conv_original=sum(r.original for r in conv_rows),
        conv_tt=sum(r.compressed for r in conv_rows),
        whole_original=sum(r.original for r in rows),
        whole_tt=sum(r.compressed for r in rows),
    )


# --- strict JSON schema -------------------------------------------------------


def _require(cond: bool, where: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {message}")


def _int_field(doc: dict, key: str, where: str) -> int:
    _require(key in doc, where, f"missing required field {key!r}")
    v = doc[key]
    _require(isinstance(v, int) and not isinstance(v, bool), where, f"{key!r} must be an integer")
    _require(v >= 1, where, f"{key!r} must be >= 1")
    return v


def _int_list(v, where: str, key: str) -> tuple:
    _require(isinstance(v, list) and v, where, f"{key!r} must be a nonempty list of ints")
    for item in v:
        _require(
            isinstance(item, int) and not isinstance(item, bool) and item >= 1,
            where,
            f"{key!r} entries must be integers >= 1",
        )
    return tuple(v)


def _parse_tt(doc, where: str, layer_kind: str) -> TTLayerConfig:
    _require(isinstance(doc, dict), where, "'tt' must be an object")
    allowed = {"in_factors", "out_factors", "ranks"}
    unknown = set(doc) - allowed
    _require(not unknown, where, f"unknown field(s) {sorted(unknown)}")
    for key in ("in_factors", "out_factors", "ranks"):
        _require(key in doc, where, f"missing required field {key!r}")
    in_factors = _int_list(doc["in_factors"], where, "in_factors")
    out_factors = _int_list(doc["out_factors"], where, "out_factors")
    _require(
        len(in_factors) == len(out_factors),
        where,
        "in_factors and out_factors must have the same length",
    )
    ranks = doc["ranks"]
    if isinstance(ranks, str):
        _require(ranks in _AUTO_RANKS, where, f"ranks string must be one of {sorted(_AUTO_RANKS)}")
    else:
        ranks = _int_list(ranks, where, "ranks")
        want = len(in_factors) if layer_kind in ("conv3d", "conv2d") else len(in_factors) - 1
        _require(
            len(ranks) == want,
            where,
            f"expected {want} ranks for this layer, got {len(ranks)}",
        )
    return TTLayerConfig(in_factors, out_factors, ranks)


def _parse_layer(doc, index: int) -> LayerSpec:
    where = f"layers[{index}]"
    _require(isinstance(doc, dict), where, "layer must be an object")
    allowed = {"kind", "filter", "in", "out", "tt"}
    unknown = set(doc) - allowed
    _require(not unknown, where, f"unknown field(s) {sorted(unknown)}")
    _require("kind" in doc, where, "missing required field 'kind'")
    kind = doc["kind"]
    _require(kind in _KINDS, where, f"'kind' must be one of {list(_KINDS)}")

    if kind == "pool":
        extra = set(doc) - {"kind", "filter"}
        _require(not extra, where, f"pool layers take no field(s) {sorted(extra)}")
        return LayerSpec(kind="pool")

    in_dim = _int_field(doc, "in", where)
    out_dim = _int_field(doc, "out", where)
    filter_dims = None
    if kind in ("conv3d", "conv2d"):
        _require("filter" in doc, where, "missing required field 'filter'")
        filter_dims = _int_list(doc["filter"], where, "filter")
        want = 3 if kind == "conv3d" else 2
        _require(
            len(filter_dims) == want,
            where,
            f"'filter' must have {want} entries for {kind}",
        )
    else:
        _require("filter" not in doc, where, "'filter' is only valid on conv layers")

    tt = None
    if "tt" in doc:
        tt = _parse_tt(doc["tt"], where + ".tt", kind)
        _require(
            math.prod(tt.in_factors) == in_dim,
            where + ".tt",
            f"in_factors multiply to {math.prod(tt.in_factors)}, not {in_dim}",
        )
        _require(
            math.prod(tt.out_factors) == out_dim,
            where + ".tt",
            f"out_factors multiply to {math.prod(tt.out_factors)}, not {out_dim}",
        )
        if kind == "linear" and not isinstance(tt.ranks, str):
            _require(len(tt.in_factors) >= 2, where + ".tt", "linear TT layers need order >= 2")
    return LayerSpec(kind=kind, filter_dims=filter_dims, in_dim=in_dim, out_dim=out_dim, tt=tt)


def architecture_from_dict(doc) -> ArchitectureSpec:
    """Validate a parsed config document; unknown fields are rejected."""
    _require(isinstance(doc, dict), "config", "top level must be an object")
    unknown = set(doc) - {"name", "layers"}
    _require(not unknown, "config", f"unknown field(s) {sorted(unknown)}")
    _require("name" in doc, "config", "missing required field 'name'")
    _require(isinstance(doc["name"], str) and doc["name"], "config", "'name' must be a nonempty string")
    _require("layers" in doc, "config", "missing required field 'layers'")
    _require(
        isinstance(doc["layers"], list) and doc["layers"],
        "config",
        "'layers' must be a nonempty list",
    )
    layers = [_parse_layer(layer, i) for i, layer in enumerate(doc["layers"])]
    return ArchitectureSpec(doc["name"], tuple(layers))


def load_architecture(path) -> ArchitectureSpec:
    """Read and validate an architecture config file.

    Raises
    ------
    ConfigError
        On JSON syntax errors (with line/column) or schema violations
        (with the offending field path).
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return architecture_from_dict(doc)


# --- report rendering ---------------------------------------------------------


def render_report_text(report: CompressionReport) -> str:
    """Aligned text table; ratios printed with one decimal place."""
    lines = [f"architecture: {report.name}"]
    header = f"{'#':>3}  {'kind':<7}{'original':>14}{'compressed':>14}{'ratio':>9}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in report.layers:
        if row.compressed:
            ratio = f"{row.original / row.compressed:.1f}"
        else:
            ratio = "-"
        lines.append(
            f"{row.index + 1:>3}  {row.kind:<7}{row.original:>14}{row.compressed:>14}{ratio:>9}"
        )
    lines.append("-" * len(header))
    lines.append(f"conv subtotal: {report.conv_original} -> {report.conv_tt}")
    lines.append(f"whole network: {report.whole_original} -> {report.whole_tt}")
    lines.append(f"compression ratio: {report.ratio:.1f}x")
    return "\n".join(lines)


def report_to_json(report: CompressionReport) -> dict:
    return {
        "name": report.name,
        "layers": [
            {
                "index": row.index,
                "kind": row.kind,
                "original": row.original,
                "compressed": row.compressed,
            }
            for row in report.layers
        ],
        "conv": {"original": report.conv_original, "compressed": report.conv_tt},
        "whole": {"original": report.whole_original, "compressed": report.whole_tt},
        "ratio": report.ratio,
    }
