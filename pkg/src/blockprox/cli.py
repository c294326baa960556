"""Command-line interface.

Subcommands:

* ``msnmf`` -- run the multilayer sparse NMF benchmark;
* ``sntd``  -- run the sparse nonnegative CP benchmark;
* ``synth`` -- generate a synthetic dataset and its ground-truth factors;
* ``stats`` -- summarize a previously written trace CSV.

Flags override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import (
    acceptance_stats,
    build_run_config,
    parse_config_file,
    parse_dims,
    parse_shapes,
    run_benchmark,
)
from .io import load_trace_csv, save_dense_tensor, save_matrix_market
from .solver import ORDER_MODES, SCHEDULES
from .synth import generate_synthetic

__all__ = ["main"]


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, metavar="PATH",
                        help="flat key = value config file")
    parser.add_argument("--data", type=str, default=None, metavar="PATH",
                        help="input dataset; synthesized when omitted")
    parser.add_argument("--out", type=str, default=None, metavar="PATH",
                        help="trace CSV output path")
    parser.add_argument("--seed", type=int, default=None, metavar="U64")
    parser.add_argument("--order", choices=ORDER_MODES, default=None,
                        help="block visiting order")
    parser.add_argument("--schedule", choices=SCHEDULES, default=None,
                        help="momentum schedule")
    parser.add_argument("--eps", type=float, default=None,
                        help="stop when consecutive relative errors differ by less")
    parser.add_argument("--max-iters", type=int, default=None, dest="max_iters")
    parser.add_argument("--max-time", type=float, default=None, dest="max_time",
                        help="wall-clock budget in seconds")
    parser.add_argument("--sparsity", type=float, default=None, metavar="FRACTION",
                        help="per-block nonzero budget as a fraction of entries")
    parser.add_argument("--density", type=float, default=None, metavar="FRACTION",
                        help="support density of synthetic ground-truth factors")
    parser.add_argument("--repeat", type=int, default=None, metavar="R",
                        help="number of seeds to run (seed, seed+1, ...)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockprox",
        description="Block proximal benchmark runner for sparse nonnegative factorizations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_msnmf = sub.add_parser("msnmf", help="multilayer sparse NMF benchmark")
    _add_run_flags(p_msnmf)
    p_msnmf.add_argument("--shapes", type=str, default=None, metavar="d0xd1,d1xd2,...",
                         help="factor shapes of the chain")
    p_msnmf.add_argument("--rank", type=int, default=None, metavar="R",
                         help="shared inner dimension; shorthand for a two-factor chain")

    p_sntd = sub.add_parser("sntd", help="sparse nonnegative CP benchmark")
    _add_run_flags(p_sntd)
    p_sntd.add_argument("--rank", type=int, default=None, metavar="R", help="CP rank")
    p_sntd.add_argument("--dims", type=str, default=None, metavar="d0xd1x...",
                        help="tensor shape for synthetic data")

    p_synth = sub.add_parser("synth", help="write a synthetic dataset")
    p_synth.add_argument("kind", choices=("msnmf", "sntd"))
    p_synth.add_argument("--out", type=str, required=True, metavar="PATH")
    p_synth.add_argument("--shapes", type=str, default=None, metavar="d0xd1,d1xd2,...",
                         help="factor shapes (msnmf)")
    p_synth.add_argument("--dims", type=str, default=None, metavar="d0xd1x...",
                         help="tensor shape (sntd)")
    p_synth.add_argument("--rank", type=int, default=None, metavar="R")
    p_synth.add_argument("--density", type=float, default=0.3, metavar="FRACTION")
    p_synth.add_argument("--seed", type=int, default=0, metavar="U64")

    p_stats = sub.add_parser("stats", help="summarize a trace CSV")
    p_stats.add_argument("trace", type=str, metavar="TRACE.CSV")

    return parser


_RUN_FLAG_FIELDS = (
    "data", "out", "seed", "order", "schedule", "eps", "max_iters",
    "max_time", "sparsity", "density", "repeat", "rank",
)


def _run_subcommand(kind: str, args: argparse.Namespace) -> int:
    file_values = parse_config_file(args.config) if args.config else None
    overrides: dict[str, object] = {
        name: getattr(args, name, None) for name in _RUN_FLAG_FIELDS
    }
    if kind == "msnmf" and args.shapes is not None:
        overrides["shapes"] = parse_shapes(args.shapes)
    if kind == "sntd" and args.dims is not None:
        overrides["dims"] = parse_dims(args.dims)
    config = build_run_config(kind, file_values, overrides)
    return run_benchmark(config)


def _synth_subcommand(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "msnmf":
        if args.shapes is None:
            raise ValueError("synth msnmf needs --shapes")
        shapes = parse_shapes(args.shapes)
        for j in range(len(shapes) - 1):
            if shapes[j][1] != shapes[j + 1][0]:
                raise ValueError(
                    f"factor {j} has {shapes[j][1]} columns but factor {j + 1} "
                    f"has {shapes[j + 1][0]} rows"
                )
        chain = [shapes[0][0]] + [s[1] for s in shapes]
        data, factors = generate_synthetic("msnmf", chain, None, args.density, args.seed)
        save_matrix_market(out, data)
    else:
        if args.dims is None or args.rank is None:
            raise ValueError("synth sntd needs --dims and --rank")
        data, factors = generate_synthetic(
            "sntd", parse_dims(args.dims), args.rank, args.density, args.seed
        )
        save_dense_tensor(out, data)
    for j, factor in enumerate(factors):
        factor_path = out.with_name(f"{out.stem}_gt_factor{j + 1}.mtx")
        save_matrix_market(factor_path, factor)
    print(f"dataset: {out}")
    print(f"ground-truth factors: {len(factors)}")
    return 0


def _stats_subcommand(args: argparse.Namespace) -> int:
    records = load_trace_csv(args.trace)
    if not records:
        print(f"trace: {args.trace}")
        print("iterations: 0")
        return 0
    last = records[-1]
    print(f"trace: {args.trace}")
    print(f"iterations: {last.iteration}")
    print(f"objective: {last.objective:.6e}")
    print(f"relerr: {last.relerr:.6e}")
    print("\n".join(acceptance_stats(records).lines()))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in ("msnmf", "sntd"):
            return _run_subcommand(args.command, args)
        if args.command == "synth":
            return _synth_subcommand(args)
        return _stats_subcommand(args)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
