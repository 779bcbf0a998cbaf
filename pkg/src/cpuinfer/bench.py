"""Measurement harnesses behind the CLI subcommands.  Each returns plain row
dicts; ``write_csv`` renders them with a fixed column order."""
from __future__ import annotations

import csv
import hashlib
import io
import os
import statistics
import sys
from dataclasses import dataclass, field
from time import perf_counter_ns

import numpy as np

from .dispatch import DispatchCache, KernelDescriptor, build_registry, dispatch_fast, dispatch_full
from .gemm import BASELINE, PartitionParams, TransposeMode, gemm_blocked, gemm_naive
from .nn.config import EncoderConfig
from .nn.linear import WARMUP_RUNS, ProfileCache, wall_timer
from .nn.model import Model, build_model, model_forward
from .tensor import InvalidArgument, make_rng, max_rel_err, random_matrix, transpose
from .timing import MODULES, SUBLAYERS, TimingBreakdown

THREADS_ENV = "INFER_NUM_THREADS"
DEFAULT_SEQ_LENS = (8, 64, 384)
RATIO_SEQ_LENS = tuple(2**i for i in range(10))
SWEEP_BKS = (64, 384)
ERR_BOUND = 1e-4

MODEL_COLUMNS = (
    ["cfg", "seq_len", "threads", "partition", "adaptive", "reps", "mean_ms", "std_ms", "median_ms", "min_ms"]
    + [f"module_{m}_ms" for m in MODULES]
    + [f"sublayer_{s}_ms" for s in SUBLAYERS]
    + ["total_ms", "matmul_share", "checksum"]
)
RATIO_COLUMNS = ["in_dim", "out_dim", "seq_len", "threads", "reps", "nn_median_ns", "nt_median_ns", "ratio_nn_nt"]
DISPATCH_COLUMNS = [
    "m", "k", "n", "threads", "path", "reps",
    "dispatch_median_ns", "kernel_median_ns", "dispatch_mean_ns", "kernel_mean_ns", "dispatch_share", "mismatches",
]  # fmt: skip
SWEEP_COLUMNS = ["cfg", "m", "k", "n", "mode", "bm", "bn", "bk", "threads", "reps", "median_ms", "max_rel_err", "ok"]


def resolve_threads(flag: int | None = None) -> int:
    """--threads flag, then $INFER_NUM_THREADS, then 1."""
    if flag is not None:
        value = flag
    else:
        env = os.environ.get(THREADS_ENV)
        if env is None or env.strip() == "":
            return 1
        try:
            value = int(env)
        except ValueError:
            raise InvalidArgument(f"{THREADS_ENV}={env!r} is not an integer") from None
    if value < 1:
        raise InvalidArgument(f"thread count must be >= 1, got {value}")
    return value


def pooled_checksum(pooled: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(pooled).tobytes()).hexdigest()[:16]


@dataclass
class BenchResult:
    config: dict
    latencies_ms: list[float]
    mean_ms: float
    std_ms: float
    breakdown: TimingBreakdown
    pooled: np.ndarray = field(repr=False)
    checksums: list[str] = field(default_factory=list)

    @property
    def median_ms(self) -> float:
        return statistics.median(self.latencies_ms)

    def row(self) -> dict:
        bd = self.breakdown
        row = dict(self.config)
        row.update(
            reps=len(self.latencies_ms),
            mean_ms=self.mean_ms,
            std_ms=self.std_ms,
            median_ms=self.median_ms,
            min_ms=min(self.latencies_ms),
        )
        for m in MODULES:
            row[f"module_{m}_ms"] = bd.by_module[m] / 1e6
        for s in SUBLAYERS:
            row[f"sublayer_{s}_ms"] = bd.by_sublayer[s] / 1e6
        row["total_ms"] = bd.total_ns / 1e6
        row["matmul_share"] = bd.matmul_share()
        row["checksum"] = self.checksums[0] if self.checksums else ""
        return row


def token_ids(cfg: EncoderConfig, seq_len: int, seed: int) -> np.ndarray:
    return make_rng(seed + 1).integers(0, cfg.vocab, size=seq_len)


def bench_model(
    cfg: EncoderConfig,
    seq_len: int,
    threads: int,
    reps: int = 5,
    params: PartitionParams = BASELINE,
    adaptive: bool = True,
    *,
    seed: int | None = None,
    model: Model | None = None,
    cache: ProfileCache | None = None,
    cfg_name: str = "",
    partition_name: str = "",
) -> BenchResult:
    """Latency of model_forward over ``reps`` timed runs after one warm-up.

    Model construction (and profiling) happens outside the timed region; pass
    ``model`` to reuse one across a grid.
    """
    if not 1 <= seq_len <= cfg.max_len:
        raise InvalidArgument(f"seq_len must be in [1, {cfg.max_len}], got {seq_len}")
    if reps < 1:
        raise InvalidArgument(f"reps must be >= 1, got {reps}")
    seed = cfg.seed if seed is None else seed
    if model is None:
        model = build_model(cfg, seed, threads, cache, profile=adaptive, params=params)
    ids = token_ids(cfg, seq_len, seed)
    model_forward(model, ids, threads, params)  # warm-up, discarded
    latencies, checksums = [], []
    total = TimingBreakdown()
    pooled = None
    for _ in range(reps):
        t0 = perf_counter_ns()
        pooled, bd = model_forward(model, ids, threads, params)
        latencies.append((perf_counter_ns() - t0) / 1e6)
        total.merge(bd)
        checksums.append(pooled_checksum(pooled))
    mean = statistics.fmean(latencies)
    std = statistics.stdev(latencies) if reps > 1 else 0.0
    config = dict(
        cfg=cfg_name,
        seq_len=seq_len,
        threads=threads,
        partition=partition_name or f"{params.bm},{params.bn},{params.bk}",
        adaptive="on" if adaptive else "off",
    )
    return BenchResult(config, latencies, mean, std, total, pooled, checksums)


def _median_of(fn, mode, bucket, reps, timer) -> float:
    for _ in range(WARMUP_RUNS):
        timer(fn, mode, bucket)
    return statistics.median(timer(fn, mode, bucket) for _ in range(reps))


def bench_matmul_ratio(
    shapes,
    seq_lens=RATIO_SEQ_LENS,
    threads_list=(1,),
    reps: int = 5,
    params: PartitionParams = BASELINE,
    *,
    timer=wall_timer,
    seed: int = 0,
) -> list[dict]:
    """NN vs NT medians for [seq_len, in] x [in, out] over the whole grid.

    ratio_nn_nt > 1 means the transposed-weight form was faster.
    """
    if reps < 1:
        raise InvalidArgument(f"reps must be >= 1, got {reps}")
    rng = make_rng(seed)
    rows = []
    for in_dim, out_dim in shapes:
        w = random_matrix(in_dim, out_dim, rng)
        w_t = transpose(w)
        for seq_len in seq_lens:
            x = random_matrix(seq_len, in_dim, rng)
            for t in threads_list:
                bucket = min(seq_len.bit_length() - 1, 9)
                nn = _median_of(lambda: gemm_blocked(x, w, TransposeMode.NN, params, t), TransposeMode.NN, bucket, reps, timer)
                nt = _median_of(lambda: gemm_blocked(x, w_t, TransposeMode.NT, params, t), TransposeMode.NT, bucket, reps, timer)
                rows.append(
                    dict(in_dim=in_dim, out_dim=out_dim, seq_len=seq_len, threads=t, reps=reps,
                         nn_median_ns=nn, nt_median_ns=nt, ratio_nn_nt=nn / nt if nt > 0 else float("nan"))
                )  # fmt: skip
    return rows


def _phase_split(stamps: list[int]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(stamps, dtype=np.int64).reshape(-1, 4)
    dispatch = (s[:, 1] - s[:, 0]) + (s[:, 3] - s[:, 2])
    kernel = s[:, 2] - s[:, 1]
    return dispatch, kernel


def bench_dispatch_overhead(
    shape=(8, 768, 768),
    threads: int = 2,
    reps: int = 10_000,
    params: PartitionParams = BASELINE,
    paths=("full", "fast"),
    *,
    seed: int = 0,
    warmup: int = 20,
    verify: bool = False,
) -> list[dict]:
    """Per-call dispatch-phase vs kernel-phase times for the full and fast paths.

    With ``verify`` every call's output is compared bitwise with the first
    path's output of the same round; differences are counted per path.
    """
    if reps < 1000:
        raise InvalidArgument(f"reps must be >= 1000 for dispatch overhead, got {reps}")
    if "fast" in paths and threads < 2:
        raise InvalidArgument("the fast path needs threads >= 2")
    for p in paths:
        if p not in ("full", "fast"):
            raise InvalidArgument(f"unknown dispatch path {p!r}")
    m, k, n = shape
    rng = make_rng(seed)
    a = random_matrix(m, k, rng)
    b = random_matrix(k, n, rng)
    reg = build_registry()
    d = KernelDescriptor(TransposeMode.NN, m, n, k, threads, params)
    cache = DispatchCache()
    calls = {
        "full": lambda st: dispatch_full(reg, d, a, b, st),
        "fast": lambda st: dispatch_fast(cache, reg, d, a, b, st),
    }
    for path in paths:
        for _ in range(warmup):
            calls[path](None)
    # Paths alternate call by call so drift in clock or load hits both alike.
    stamps = {path: [] for path in paths}
    mismatches = dict.fromkeys(paths, 0)
    for _ in range(reps):
        first = None
        for path in paths:
            c = calls[path](stamps[path])
            if verify:
                if first is None:
                    first = c
                elif not np.array_equal(c, first):
                    mismatches[path] += 1
    rows = []
    for path in paths:
        disp, kern = _phase_split(stamps[path])
        rows.append(
            dict(m=m, k=k, n=n, threads=threads, path=path, reps=reps,
                 dispatch_median_ns=float(np.median(disp)), kernel_median_ns=float(np.median(kern)),
                 dispatch_mean_ns=float(disp.mean()), kernel_mean_ns=float(kern.mean()),
                 dispatch_share=float(disp.sum() / (disp.sum() + kern.sum())),
                 mismatches=mismatches[path] if verify else "")
        )  # fmt: skip
    return rows


def sweep_shapes(cfg: EncoderConfig, seq_len: int) -> list[tuple[int, int, int]]:
    """(m, k, n) operands of the encoder's linear layers for one sequence length."""
    return [(seq_len, i, o) for i, o in cfg.linear_shapes()]


def sweep_partition(
    bk_list=SWEEP_BKS,
    shapes=((64, 768, 768),),
    threads: int = 1,
    reps: int = 3,
    *,
    bm: int = BASELINE.bm,
    bn: int = BASELINE.bn,
    modes=(TransposeMode.NN,),
    seed: int = 0,
    cfg_name: str = "",
) -> list[dict]:
    """Median blocked-GEMM time per BK, each row checked against the naive oracle."""
    if reps < 1:
        raise InvalidArgument(f"reps must be >= 1, got {reps}")
    params_list = [PartitionParams(bm, bn, bk) for bk in bk_list]
    rng = make_rng(seed)
    rows = []
    for m, k, n in shapes:
        a = random_matrix(m, k, rng)
        b = random_matrix(k, n, rng)
        for mode in modes:
            mode = TransposeMode(mode)
            bb = b if mode is TransposeMode.NN else transpose(b)
            oracle = gemm_naive(a, bb, mode)
            for p in params_list:
                c = gemm_blocked(a, bb, mode, p, threads)
                times = []
                for _ in range(reps):
                    t0 = perf_counter_ns()
                    gemm_blocked(a, bb, mode, p, threads)
                    times.append((perf_counter_ns() - t0) / 1e6)
                err = max_rel_err(c, oracle)
                rows.append(
                    dict(cfg=cfg_name, m=m, k=k, n=n, mode=mode.value, bm=p.bm, bn=p.bn, bk=p.bk,
                         threads=threads, reps=reps, median_ms=statistics.median(times),
                         max_rel_err=err, ok=int(err <= ERR_BOUND))
                )  # fmt: skip
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(rows: list[dict], path, columns) -> None:
    """UTF-8 CSV with a header row; floats at 9 significant digits.

    ``path`` of None or "-" writes to stdout.
    """
    columns = list(columns)
    if path in (None, "-"):
        _write(rows, sys.stdout, columns)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write(rows, fh, columns)


def _write(rows, fh, columns):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])


def csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    _write(rows, buf, list(columns))
    return buf.getvalue()
