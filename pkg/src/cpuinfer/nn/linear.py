"""Linear layer that keeps both weight forms and picks NN or NT per
sequence-length bucket, using one-time profiling shared by equal shapes."""
from __future__ import annotations

import math
import statistics
import threading
from dataclasses import dataclass, field
from time import perf_counter_ns
from typing import Callable

import numpy as np

from ..dispatch import DispatchCache, KernelRegistry, default_registry, dispatch
from ..gemm import BASELINE, PartitionParams, TransposeMode, gemm_blocked
from ..tensor import DTYPE, InvalidArgument, Matrix, as_matrix, make_rng, random_matrix, transpose

NUM_BUCKETS = 10
WARMUP_RUNS = 2
TIMED_RUNS = 5
PROFILE_SEED = 0x5EED

# timer(fn, mode, bucket) -> elapsed nanoseconds for one run of fn
Timer = Callable[[Callable[[], object], TransposeMode, int], float]


def wall_timer(fn, mode, bucket) -> float:
    t0 = perf_counter_ns()
    fn()
    return perf_counter_ns() - t0


def bucket_index(seq_len: int) -> int:
    """floor(log2(seq_len)), clamped to the last bucket."""
    if seq_len < 1:
        raise InvalidArgument(f"sequence length must be >= 1, got {seq_len}")
    return min(int(seq_len).bit_length() - 1, NUM_BUCKETS - 1)


@dataclass(frozen=True)
class TransposeFlags:
    """entries[i] is True when bucket i should multiply by the transposed weight."""

    entries: tuple[bool, ...]

    def __post_init__(self):
        if len(self.entries) != NUM_BUCKETS:
            raise InvalidArgument(f"TransposeFlags needs {NUM_BUCKETS} entries, got {len(self.entries)}")

    @classmethod
    def uniform(cls, transposed: bool) -> "TransposeFlags":
        return cls((bool(transposed),) * NUM_BUCKETS)

    def __getitem__(self, i: int) -> bool:
        return self.entries[i]

    def mode_for(self, seq_len: int) -> TransposeMode:
        return TransposeMode.NT if self.entries[bucket_index(seq_len)] else TransposeMode.NN


@dataclass
class ProfileCache:
    """(in_dim, out_dim, threads) -> TransposeFlags, profiled at most once per key."""

    entries: dict = field(default_factory=dict)
    profile_runs: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _median_ns(fn, mode, bucket, timer: Timer) -> float:
    for _ in range(WARMUP_RUNS):
        timer(fn, mode, bucket)
    return statistics.median(timer(fn, mode, bucket) for _ in range(TIMED_RUNS))


def measure_forms(
    x: Matrix, w: Matrix, w_t: Matrix, threads: int, params: PartitionParams, bucket: int, timer: Timer = wall_timer
) -> tuple[float, float]:
    """Median NN and NT times (ns) for x @ w, with the protocol used by profiling."""
    nn = _median_ns(lambda: gemm_blocked(x, w, TransposeMode.NN, params, threads), TransposeMode.NN, bucket, timer)
    nt = _median_ns(lambda: gemm_blocked(x, w_t, TransposeMode.NT, params, threads), TransposeMode.NT, bucket, timer)
    return nn, nt


def profile_linear(
    in_dim: int,
    out_dim: int,
    threads: int,
    cache: ProfileCache,
    timer: Timer = wall_timer,
    params: PartitionParams = BASELINE,
) -> TransposeFlags:
    """Flags for an [in_dim, out_dim] weight, profiling only on a cache miss.

    For bucket i an input of 2**i rows is timed against both weight forms
    (2 warm-up + 5 timed runs each); the transposed form wins ties.
    """
    if in_dim < 1 or out_dim < 1 or threads < 1:
        raise InvalidArgument(f"profile_linear: bad arguments in={in_dim} out={out_dim} threads={threads}")
    key = (in_dim, out_dim, threads)
    hit = cache.entries.get(key)
    if hit is not None:
        return hit
    with cache._lock:
        hit = cache.entries.get(key)
        if hit is not None:
            return hit
        rng = make_rng(PROFILE_SEED)
        w = random_matrix(in_dim, out_dim, rng)
        w_t = transpose(w)
        entries = []
        for i in range(NUM_BUCKETS):
            x = random_matrix(2**i, in_dim, rng)
            nn, nt = measure_forms(x, w, w_t, threads, params, i, timer)
            entries.append(nt <= nn)
        flags = TransposeFlags(tuple(entries))
        cache.entries[key] = flags
        cache.profile_runs += 1
        return flags


@dataclass(frozen=True)
class LinearLayer:
    w_normal: Matrix  # [in, out]
    w_transposed: Matrix  # [out, in]
    bias: np.ndarray  # [out]
    flags: TransposeFlags

    @classmethod
    def from_weight(cls, w: Matrix, bias, flags: TransposeFlags) -> "LinearLayer":
        w = as_matrix(w, "weight")
        bias = np.ascontiguousarray(bias, dtype=DTYPE)
        if bias.shape != (w.shape[1],):
            raise InvalidArgument(f"bias shape {bias.shape} does not match out_dim {w.shape[1]}")
        return cls(w, transpose(w), bias, flags)

    @property
    def in_dim(self) -> int:
        return self.w_normal.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w_normal.shape[1]

    def with_flags(self, flags: TransposeFlags) -> "LinearLayer":
        return LinearLayer(self.w_normal, self.w_transposed, self.bias, flags)


def init_linear(in_dim: int, out_dim: int, rng, flags: TransposeFlags) -> LinearLayer:
    # Uniform weights scaled to variance 1/in_dim keep activations O(1).
    w = random_matrix(in_dim, out_dim, rng)
    w *= DTYPE(math.sqrt(12.0 / in_dim))
    bias = random_matrix(1, out_dim, rng)[0] * DTYPE(0.1)
    return LinearLayer.from_weight(w, bias, flags)


def linear_forward(
    x: Matrix,
    layer: LinearLayer,
    threads: int = 1,
    params: PartitionParams = BASELINE,
    *,
    cache: DispatchCache | None = None,
    registry: KernelRegistry | None = None,
) -> Matrix:
    """x @ W + b, with the weight form chosen by the flag of x's length bucket."""
    x = as_matrix(x, "x")
    if x.shape[1] != layer.in_dim:
        raise InvalidArgument(f"linear_forward: input width {x.shape[1]} != in_dim {layer.in_dim}")
    mode = layer.flags.mode_for(x.shape[0])
    w = layer.w_transposed if mode is TransposeMode.NT else layer.w_normal
    registry = registry or default_registry()
    cache = cache if cache is not None else _shared_dispatch_cache
    out = dispatch(cache, registry, x, w, mode, threads, params)
    out += layer.bias
    return out


_shared_dispatch_cache = DispatchCache()
