"""Blocked, multi-threaded single-precision GEMM with NN and NT source forms."""
from __future__ import annotations

import enum
import functools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .tensor import DTYPE, InvalidArgument, Matrix, as_matrix


class TransposeMode(str, enum.Enum):
    """NN: B stored [K x N].  NT: B stored transposed, [N x K]."""

    NN = "NN"
    NT = "NT"


@dataclass(frozen=True)
class PartitionParams:
    bm: int
    bn: int
    bk: int

    def __post_init__(self):
        for name in ("bm", "bn", "bk"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidArgument(f"PartitionParams.{name} must be an integer >= 1, got {v!r}")

    @classmethod
    def parse(cls, text: str) -> "PartitionParams":
        """Accepts ``baseline``, ``patched`` or ``bm,bn,bk``."""
        key = text.strip().lower()
        if key in PROFILES:
            return PROFILES[key]
        parts = key.split(",")
        if len(parts) != 3:
            raise InvalidArgument(f"partition must be baseline, patched or bm,bn,bk; got {text!r}")
        try:
            bm, bn, bk = (int(p) for p in parts)
        except ValueError:
            raise InvalidArgument(f"partition components must be integers; got {text!r}") from None
        return cls(bm, bn, bk)


BASELINE = PartitionParams(bm=64, bn=64, bk=384)
PATCHED = PartitionParams(bm=64, bn=64, bk=64)
PROFILES = {"baseline": BASELINE, "patched": PATCHED}


@dataclass(frozen=True)
class GemmTask:
    a: Matrix
    b: Matrix
    mode: TransposeMode = TransposeMode.NN


def output_shape(a: Matrix, b: Matrix, mode: TransposeMode) -> tuple[int, int]:
    """(M, N) of ``a @ op(b)``; raises on inner-dimension mismatch."""
    mode = TransposeMode(mode)
    if mode is TransposeMode.NN:
        if a.shape[1] != b.shape[0]:
            raise InvalidArgument(f"NN shape mismatch: A is {a.shape}, B is {b.shape} (need A.cols == B.rows)")
        return a.shape[0], b.shape[1]
    if a.shape[1] != b.shape[1]:
        raise InvalidArgument(f"NT shape mismatch: A is {a.shape}, B is {b.shape} (need A.cols == B.cols)")
    return a.shape[0], b.shape[0]


def _check_threads(threads: int) -> None:
    if not isinstance(threads, (int, np.integer)) or threads < 1:
        raise InvalidArgument(f"threads must be an integer >= 1, got {threads!r}")


_pool_lock = threading.Lock()


@functools.lru_cache(maxsize=None)
def _worker_pool(threads: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=threads, thread_name_prefix=f"gemm{threads}")


def worker_pool(threads: int) -> ThreadPoolExecutor:
    """Fixed-size pool shared by every call with the same thread count."""
    with _pool_lock:
        return _worker_pool(threads)


@functools.lru_cache(maxsize=256)
def _block_assignment(m: int, n: int, bm: int, bn: int, workers: int) -> tuple[np.ndarray, ...]:
    # Contiguous slices of the row-major (M-block x N-block) grid, one per
    # worker.  Ownership only decides who computes a block, never how.
    grid = np.array(
        [(i, min(i + bm, m), j, min(j + bn, n)) for i in range(0, m, bm) for j in range(0, n, bn)],
        dtype=np.int64,
    )
    chunks = np.array_split(grid, min(workers, len(grid)))
    return tuple(np.ascontiguousarray(c) for c in chunks if len(c))


def naive_kernel(a: Matrix, b: Matrix, mode: TransposeMode, params=None, threads: int = 1) -> Matrix:
    m, n = (a.shape[0], b.shape[1]) if mode is TransposeMode.NN else (a.shape[0], b.shape[0])
    c = np.empty((m, n), dtype=DTYPE)
    if mode is TransposeMode.NN:
        _kernels.naive_nn(a, b, c)
    else:
        _kernels.naive_nt(a, b, c)
    return c


def serial_kernel(a: Matrix, b: Matrix, mode: TransposeMode, params: PartitionParams, threads: int = 1) -> Matrix:
    """Single-thread blocked loop nest: K panels, then M blocks, then N blocks."""
    n = b.shape[1] if mode is TransposeMode.NN else b.shape[0]
    c = np.zeros((a.shape[0], n), dtype=DTYPE)
    _kernels.blocked_serial(a, b, c, mode is TransposeMode.NT, params.bm, params.bn, params.bk)
    return c


def parallel_kernel(a: Matrix, b: Matrix, mode: TransposeMode, params: PartitionParams, threads: int) -> Matrix:
    """Owned-block parallel GEMM; each C block runs its whole K loop on one worker."""
    m = a.shape[0]
    n = b.shape[1] if mode is TransposeMode.NN else b.shape[0]
    c = np.zeros((m, n), dtype=DTYPE)
    nt = mode is TransposeMode.NT
    chunks = _block_assignment(m, n, params.bm, params.bn, threads)
    if len(chunks) == 1:
        _kernels.blocked_owned(a, b, c, nt, chunks[0], params.bk)
        return c
    pool = worker_pool(threads)
    futures = [pool.submit(_kernels.blocked_owned, a, b, c, nt, chunk, params.bk) for chunk in chunks]
    for f in futures:
        f.result()
    return c


def _blocked(a, b, mode, params, threads):
    if threads == 1:
        return serial_kernel(a, b, mode, params)
    return parallel_kernel(a, b, mode, params, threads)


def gemm_naive(a: Matrix, b: Matrix, mode: TransposeMode = TransposeMode.NN) -> Matrix:
    """Reference triple loop (i, j, k order, float32 accumulator)."""
    a, b = as_matrix(a, "A"), as_matrix(b, "B")
    mode = TransposeMode(mode)
    output_shape(a, b, mode)
    return naive_kernel(a, b, mode)


def gemm_blocked(
    a: Matrix,
    b: Matrix,
    mode: TransposeMode = TransposeMode.NN,
    params: PartitionParams = BASELINE,
    threads: int = 1,
) -> Matrix:
    """C = A @ op(B) with explicit BM/BN/BK partitioning.

    The output is bitwise identical for every thread count, because each
    element is accumulated by exactly one worker in ascending k.
    """
    _check_threads(threads)
    a, b = as_matrix(a, "A"), as_matrix(b, "B")
    mode = TransposeMode(mode)
    output_shape(a, b, mode)
    return _blocked(a, b, mode, params, int(threads))


def gemm_batched(tasks: list[GemmTask], params: PartitionParams = BASELINE, threads: int = 1) -> list[Matrix]:
    """Independent GEMMs.  With at least as many tasks as threads, whole tasks
    are spread over the pool; otherwise each task runs intra-op parallel."""
    _check_threads(threads)
    prepared = []
    for idx, t in enumerate(tasks):
        try:
            a, b = as_matrix(t.a, "A"), as_matrix(t.b, "B")
            mode = TransposeMode(t.mode)
            output_shape(a, b, mode)
        except (InvalidArgument, ValueError) as exc:
            raise InvalidArgument(f"task {idx}: {exc}") from None
        prepared.append((a, b, mode))
    if not prepared:
        return []
    if threads == 1 or len(prepared) < threads:
        return [_blocked(a, b, mode, params, threads) for a, b, mode in prepared]
    pool = worker_pool(threads)
    futures = [pool.submit(serial_kernel, a, b, mode, params) for a, b, mode in prepared]
    return [f.result() for f in futures]
