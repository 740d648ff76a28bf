"""Command-line interface.

Subcommands: ``plan`` (tensorization planning for one conv layer), ``ratio``
(compression report from an architecture config), ``compress`` /
``reconstruct`` (dense .tten <-> train .ttcr conversion), and ``verify``
(seeded self-check suites).

Exit codes: 0 success, 1 verification or validation failure, 2 usage error
or malformed input file.  Reports go to stdout, diagnostics to stderr, and
nothing is written to output paths on failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .analysis import (
    compression_ratio,
    count_params,
    load_architecture,
    render_report_text,
    report_to_json,
    suggest_ranks_degenerate,
    suggest_ranks_modewise,
    suggest_uniform_rank,
)
from .errors import ConfigError, FileFormatError, RankLengthMismatch, TTKitError
from .tensor import read_tten, write_tten
from .tensorize import Conv3dSpec, balanced_factorization, factor_filter
from .tt import max_tt_ranks, read_ttcr, tt_param_count, tt_reconstruct, tt_svd, write_ttcr
from .verify import SIZE_CLASSES, run_all

_HEURISTICS = {"min-channel": "min_channel", "most-frequent": "most_frequent"}


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return v


def _int_csv(count: int | None = None):
    def parse(text: str):
        try:
            values = tuple(int(v) for v in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated int list")
        if any(v < 1 for v in values):
            raise argparse.ArgumentTypeError("all values must be >= 1")
        if count is not None and len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated values")
        return values

    return parse


def _fmt_factors(n: int, factors) -> str:
    return f"{n} = " + " * ".join(str(f) for f in factors)


def cmd_plan(args) -> int:
    in_factors = balanced_factorization(args.in_channels, args.order)
    out_factors = balanced_factorization(args.out_channels, args.order)
    spec = Conv3dSpec(args.filter, args.in_channels, args.out_channels, in_factors, out_factors)
    u, l = spec.filter_factors
    shape = spec.mode_sizes

    if l == 1 and spec.filter_volume > 1:
        print(
            f"warning: filter volume {spec.filter_volume} only factors as "
            f"({u}, 1); tensorization is unbalanced",
            file=sys.stderr,
        )
    for label, n, factors in (
        ("input", args.in_channels, in_factors),
        ("output", args.out_channels, out_factors),
    ):
        if n > 1 and 1 in factors:
            print(
                f"warning: {label} channels {n} have no balanced order-{args.order} "
                f"factorization; using {factors}",
                file=sys.stderr,
            )

    heuristic = _HEURISTICS[args.heuristic]
    uniform = suggest_uniform_rank(shape, heuristic)
    ranks = (uniform,) * spec.order
    rep = compression_ratio(spec, ranks)

    t, h, w = spec.filter_dims
    print(f"filter: {t} x {h} x {w} (volume {spec.filter_volume})")
    print(f"filter factor pair: u = {u}, l = {l}")
    print("input channels: " + _fmt_factors(args.in_channels, in_factors))
    print("output channels: " + _fmt_factors(args.out_channels, out_factors))
    print("tensorized shape: " + " x ".join(str(n) for n in shape))
    print("modewise full ranks: " + ", ".join(str(r) for r in suggest_ranks_modewise(shape)))
    print("split full ranks: " + ", ".join(str(r) for r in suggest_ranks_degenerate(shape)))
    print(f"suggested uniform rank ({args.heuristic}): {uniform}")
    print(f"dense parameters: {rep.original_params}")
    print(f"tt parameters at rank {uniform}: {rep.tt_params}")
    print(
        f"compression ratio: {rep.ratio:.1f}x "
        f"(bounds {rep.bound_lower:.1f}x .. {rep.bound_upper:.1f}x)"
    )
    return 0


def cmd_ratio(args) -> int:
    try:
        arch = load_architecture(args.config)
        report = count_params(arch)
    except (ConfigError, TTKitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(report_to_json(report), indent=2))
    else:
        print(render_report_text(report))
    return 0


def cmd_compress(args) -> int:
    try:
        x = read_tten(args.input)
    except FileFormatError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return 2

    caps = None if args.auto else args.ranks
    try:
        train, discarded = tt_svd(x, caps)
    except RankLengthMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TTKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    bound = math.sqrt(sum(e * e for e in discarded))
    norm = float(np.linalg.norm(x))
    rel_bound = bound / norm if norm > 0 else 0.0
    if args.max_error is not None and rel_bound > args.max_error:
        print(
            f"error: decomposition error bound {rel_bound:.3e} exceeds "
            f"requested max {args.max_error:.3e}; nothing written",
            file=sys.stderr,
        )
        return 1

    try:
        write_ttcr(args.output, train)
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
        return 1

    dense = x.size
    compressed = tt_param_count(train)
    print("achieved ranks: " + ", ".join(str(r) for r in train.ranks[1:-1]))
    print(f"dense parameters: {dense}")
    print(f"tt parameters: {compressed}")
    ratio = dense / compressed
    print(f"compression ratio: {ratio:.1f}x")
    print(f"error bound (Frobenius): {bound:.6e} (relative {rel_bound:.6e})")
    return 0


def cmd_reconstruct(args) -> int:
    try:
        train = read_ttcr(args.input)
    except FileFormatError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return 2
    x = tt_reconstruct(train)
    try:
        write_tten(args.output, x)
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
        return 1
    print("shape: " + " x ".join(str(n) for n in x.shape))
    print("ranks: " + ", ".join(str(r) for r in train.ranks[1:-1]))
    print(f"elements written: {x.size}")
    return 0


def cmd_verify(args) -> int:
    results = run_all(seed=args.seed, size=args.size)
    failed = 0
    for r in results:
        if r.passed:
            print(f"PASS {r.name}")
        else:
            failed += 1
            print(f"FAIL {r.name}: {r.detail}")
    print(f"{len(results) - failed}/{len(results)} suites passed (seed {args.seed}, size {args.size})")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttkit",
        description="Tensor-train compression toolkit for matrices and conv kernels.",
    )
    parser.add_argument("--version", action="version", version=f"ttkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan the tensorization of one 3D conv layer")
    p.add_argument("--filter", required=True, type=_int_csv(3), metavar="T,H,W",
                   help="filter dimensions, e.g. 3,5,5 (use 1,H,W for 2D kernels)")
    p.add_argument("--in", dest="in_channels", required=True, type=_positive_int,
                   metavar="C", help="input channel count")
    p.add_argument("--out", dest="out_channels", required=True, type=_positive_int,
                   metavar="S", help="output channel count")
    p.add_argument("--order", required=True, type=_positive_int, metavar="D",
                   help="number of channel factor pairs")
    p.add_argument("--heuristic", choices=sorted(_HEURISTICS), default="min-channel",
                   help="uniform rank selection rule (default: min-channel)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("ratio", help="compression report for an architecture config")
    p.add_argument("config", help="path to a JSON architecture config")
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("compress", help="decompose a .tten tensor into a .ttcr train")
    p.add_argument("input", help="input .tten path")
    p.add_argument("output", help="output .ttcr path")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ranks", type=_int_csv(), metavar="R1,R2,...",
                       help="per-link rank caps (d-1 values)")
    group.add_argument("--auto", action="store_true",
                       help="keep full ranks (exact decomposition)")
    p.add_argument("--max-error", type=float, default=None, metavar="EPS",
                   help="fail (exit 1) if the relative error bound exceeds EPS")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("reconstruct", help="rebuild a .tten tensor from a .ttcr train")
    p.add_argument("input", help="input .ttcr path")
    p.add_argument("output", help="output .tten path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="run the deterministic self-check suites")
    p.add_argument("--seed", type=int, default=42, help="RNG seed (default 42)")
    p.add_argument("--size", choices=sorted(SIZE_CLASSES), default="small",
                   help="suite size class (default small)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TTKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
