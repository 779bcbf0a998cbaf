"""cpuinfer command line: bench-model, bench-matmul, bench-dispatch, sweep-partition.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .gemm import PartitionParams, TransposeMode
from .nn.config import PRESETS, load_config
from .nn.linear import ProfileCache
from .nn.model import build_model
from .tensor import InvalidArgument

log = logging.getLogger("cpuinfer")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _shape_list(text: str) -> list[tuple[int, ...]]:
    # "768x768,768x3072"
    try:
        return [tuple(int(d) for d in item.lower().split("x")) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected shapes like 768x3072, got {text!r}") from None


def _common(p: argparse.ArgumentParser, reps: int) -> None:
    p.add_argument("--threads", type=_int_list, default=None, help="thread count(s), comma-separated")
    p.add_argument("--reps", type=int, default=reps)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="CSV path (default stdout)")
    p.add_argument("--cfg", default="bert-base", help=f"{'|'.join(PRESETS)} or a JSON file")
    p.add_argument("--partition", default="baseline", help="baseline|patched|bm,bn,bk")
    p.add_argument("--adaptive", choices=("on", "off"), default="on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpuinfer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench-model", help="encoder latency with timing breakdowns")
    _common(p, reps=5)
    p.add_argument("--seq-len", type=_int_list, default=list(bench.DEFAULT_SEQ_LENS))

    p = sub.add_parser("bench-matmul", help="NN vs NT time ratio grid")
    _common(p, reps=5)
    p.add_argument("--seq-len", type=_int_list, default=list(bench.RATIO_SEQ_LENS))
    p.add_argument("--shapes", type=_shape_list, default=None, help="weight shapes, e.g. 768x768,768x3072")

    p = sub.add_parser("bench-dispatch", help="dispatch-phase vs kernel-phase time, full and fast path")
    _common(p, reps=10_000)
    p.add_argument("--shape", type=_int_list, default=[8, 768, 768], help="m,k,n")
    p.add_argument("--paths", default="full,fast")
    p.add_argument("--verify", action="store_true", help="compare every output bitwise across paths")

    p = sub.add_parser("sweep-partition", help="blocked GEMM time and error per BK")
    _common(p, reps=3)
    p.add_argument("--bk", type=_int_list, default=list(bench.SWEEP_BKS))
    p.add_argument("--seq-len", type=int, default=64)
    p.add_argument("--modes", default="NN", help="NN, NT or NN,NT")
    return parser


def _threads(args) -> list[int]:
    if args.threads is None:
        return [bench.resolve_threads(None)]
    return [bench.resolve_threads(t) for t in args.threads]


def _resolve(args):
    """Turn flags into typed settings; any failure here is a usage error."""
    try:
        cfg = load_config(args.cfg)
        params = PartitionParams.parse(args.partition)
        threads = _threads(args)
        if args.reps < 1:
            raise InvalidArgument(f"--reps must be >= 1, got {args.reps}")
    except (InvalidArgument, ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None
    return cfg, params, threads


def run(args) -> int:
    cfg, params, threads = _resolve(args)
    cfg_name = args.cfg if args.cfg in PRESETS else "custom"
    adaptive = args.adaptive == "on"

    if args.command == "bench-model":
        for s in args.seq_len:
            if not 1 <= s <= cfg.max_len:
                raise UsageError(f"--seq-len {s} outside [1, {cfg.max_len}]")
        rows = []
        cache = ProfileCache()
        for t in threads:
            model = build_model(cfg, args.seed, t, cache, profile=adaptive, params=params)
            for s in args.seq_len:
                log.info("bench-model %s seq_len=%d threads=%d", cfg_name, s, t)
                res = bench.bench_model(cfg, s, t, args.reps, params, adaptive, seed=args.seed, model=model,
                                        cfg_name=cfg_name, partition_name=args.partition)  # fmt: skip
                rows.append(res.row())
        bench.write_csv(rows, args.out, bench.MODEL_COLUMNS)

    elif args.command == "bench-matmul":
        shapes = args.shapes or cfg.linear_shapes()
        if any(len(s) != 2 for s in shapes):
            raise UsageError("--shapes entries must be INxOUT")
        rows = bench.bench_matmul_ratio(shapes, args.seq_len, threads, args.reps, params, seed=args.seed)
        bench.write_csv(rows, args.out, bench.RATIO_COLUMNS)

    elif args.command == "bench-dispatch":
        if len(args.shape) != 3:
            raise UsageError("--shape must be m,k,n")
        paths = tuple(p.strip() for p in args.paths.split(",") if p.strip())
        rows = []
        for t in threads:
            try:
                rows += bench.bench_dispatch_overhead(
                    tuple(args.shape), t, args.reps, params, paths, seed=args.seed, verify=args.verify
                )
            except InvalidArgument as exc:
                raise UsageError(str(exc)) from None
        bench.write_csv(rows, args.out, bench.DISPATCH_COLUMNS)

    elif args.command == "sweep-partition":
        try:
            modes = [TransposeMode(m.strip().upper()) for m in args.modes.split(",")]
            if any(bk < 1 for bk in args.bk):
                raise InvalidArgument("--bk values must be >= 1")
        except (ValueError, InvalidArgument) as exc:
            raise UsageError(str(exc)) from None
        rows = []
        for t in threads:
            rows += bench.sweep_partition(args.bk, bench.sweep_shapes(cfg, args.seq_len), t, args.reps,
                                          bm=params.bm, bn=params.bn, modes=modes, seed=args.seed,
                                          cfg_name=cfg_name)  # fmt: skip
        bench.write_csv(rows, args.out, bench.SWEEP_COLUMNS)
        if not all(r["ok"] for r in rows):
            log.error("sweep-partition: some rows exceed the %.0e error bound", bench.ERR_BOUND)
            return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cpuinfer: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"cpuinfer: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
