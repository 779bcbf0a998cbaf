"""Kernel selection: a validating first-match registry scan and a memoized
fast path that skips validation and scanning on repeat shapes."""
from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass, field
from time import perf_counter_ns
from typing import Callable

import numpy as np

from .gemm import PartitionParams, TransposeMode, naive_kernel, parallel_kernel, serial_kernel
from .tensor import DTYPE, InvalidArgument, Matrix

log = logging.getLogger(__name__)

CACHE_CAPACITY = 1024


@dataclass(frozen=True)
class KernelDescriptor:
    mode: TransposeMode
    m: int
    n: int
    k: int
    threads: int
    params: PartitionParams

    @classmethod
    def for_operands(cls, a: Matrix, b: Matrix, mode, threads: int, params: PartitionParams) -> "KernelDescriptor":
        mode = TransposeMode(mode)
        n = b.shape[1] if mode is TransposeMode.NN else b.shape[0]
        return cls(mode, a.shape[0], n, a.shape[1], threads, params)


@dataclass(frozen=True)
class Capabilities:
    """One-time host probe folded into registry predicates."""

    cpu_count: int
    vector_width: int

    @classmethod
    def probe(cls) -> "Capabilities":
        width = int(os.environ.get("INFER_VECTOR_WIDTH", "16"))
        return cls(cpu_count=os.cpu_count() or 1, vector_width=width)


@dataclass(frozen=True)
class KernelEntry:
    name: str
    predicate: Callable[[KernelDescriptor, Capabilities], bool]
    fn: Callable[[Matrix, Matrix, TransposeMode, PartitionParams, int], Matrix]

    def __call__(self, a, b, d: KernelDescriptor) -> Matrix:
        return self.fn(a, b, d.mode, d.params, d.threads)


@dataclass(frozen=True)
class KernelRegistry:
    entries: tuple[KernelEntry, ...]
    caps: Capabilities

    def __post_init__(self):
        if not self.entries:
            raise InvalidArgument("registry must not be empty")

    def select(self, d: KernelDescriptor) -> KernelEntry:
        for entry in self.entries:
            if entry.predicate(d, self.caps):
                return entry
        raise AssertionError("registry has no universal fallback")


def build_registry(caps: Capabilities | None = None) -> KernelRegistry:
    caps = caps or Capabilities.probe()
    return KernelRegistry(
        entries=(
            KernelEntry("blocked_serial", lambda d, c: d.threads == 1 and c.vector_width >= 1, serial_kernel),
            KernelEntry("blocked_parallel", lambda d, c: d.threads > 1, parallel_kernel),
            KernelEntry("naive", lambda d, c: True, naive_kernel),
        ),
        caps=caps,
    )


def _validate_operand(x, name: str) -> None:
    if not isinstance(x, np.ndarray):
        raise InvalidArgument(f"{name}: not an ndarray")
    if x.dtype != DTYPE:
        raise InvalidArgument(f"{name}: dtype {x.dtype}, expected float32")
    if x.ndim != 2:
        raise InvalidArgument(f"{name}: rank {x.ndim}, expected 2")
    if not x.flags.c_contiguous:
        raise InvalidArgument(f"{name}: not row-major contiguous")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidArgument(f"{name}: empty dimension {x.shape}")
    if not x.flags.aligned:
        raise InvalidArgument(f"{name}: misaligned buffer")


def validate(d: KernelDescriptor, a: Matrix, b: Matrix) -> None:
    """Full argument check; each failure names the check that tripped."""
    if not isinstance(d.mode, TransposeMode):
        raise InvalidArgument(f"descriptor: unknown mode {d.mode!r}")
    for name in ("m", "n", "k", "threads"):
        v = getattr(d, name)
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise InvalidArgument(f"descriptor positivity: {name}={v!r}")
    if not isinstance(d.params, PartitionParams):
        raise InvalidArgument("descriptor: params is not a PartitionParams")
    _validate_operand(a, "A")
    _validate_operand(b, "B")
    if a.shape != (d.m, d.k):
        raise InvalidArgument(f"descriptor consistency: A is {a.shape}, descriptor says ({d.m}, {d.k})")
    expected_b = (d.k, d.n) if d.mode is TransposeMode.NN else (d.n, d.k)
    if b.shape != expected_b:
        raise InvalidArgument(
            f"shape agreement ({d.mode.value}): B is {b.shape}, expected {expected_b} for k={d.k}, n={d.n}"
        )


def dispatch_full(reg: KernelRegistry, d: KernelDescriptor, a: Matrix, b: Matrix, stamps: list | None = None) -> Matrix:
    """Validate, scan the registry in order, run the first compatible kernel.

    When ``stamps`` is given, four monotonic timestamps are appended: entry,
    kernel start, kernel end, exit.
    """
    if stamps is not None:
        stamps.append(perf_counter_ns())
    validate(d, a, b)
    entry = reg.select(d)
    if stamps is not None:
        stamps.append(perf_counter_ns())
        c = entry(a, b, d)
        stamps.append(perf_counter_ns())
        stamps.append(perf_counter_ns())
        return c
    return entry(a, b, d)


@dataclass
class DispatchCache:
    """Descriptor -> kernel map.  Lookups are lock-free; inserts serialize."""

    capacity: int = CACHE_CAPACITY
    entries: dict = field(default_factory=dict)
    saturated: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def insert(self, d: KernelDescriptor, entry: KernelEntry) -> None:
        with self._lock:
            if d in self.entries:
                return
            if len(self.entries) >= self.capacity:
                if not self.saturated:
                    log.warning("dispatch cache full (%d entries); new shapes take the full path", self.capacity)
                self.saturated = True
                return
            self.entries[d] = entry

    def __len__(self) -> int:
        return len(self.entries)


def dispatch_fast(
    cache: DispatchCache,
    reg: KernelRegistry,
    d: KernelDescriptor,
    a: Matrix,
    b: Matrix,
    stamps: list | None = None,
) -> Matrix:
    """Cached kernel call with no validation on a hit.

    Only defined for multi-threaded descriptors; a hit trusts that ``a`` and
    ``b`` match ``d``.
    """
    if d.threads <= 1:
        raise InvalidArgument("dispatch_fast requires threads > 1; use dispatch_full for a single thread")
    if stamps is not None:
        stamps.append(perf_counter_ns())
    entry = cache.entries.get(d)
    if entry is None:
        if stamps is not None:
            stamps.pop()
        c = dispatch_full(reg, d, a, b, stamps)
        cache.insert(d, reg.select(d))
        return c
    if stamps is not None:
        stamps.append(perf_counter_ns())
        c = entry(a, b, d)
        stamps.append(perf_counter_ns())
        stamps.append(perf_counter_ns())
        return c
    return entry(a, b, d)


def dispatch(
    cache: DispatchCache,
    reg: KernelRegistry,
    a: Matrix,
    b: Matrix,
    mode: TransposeMode,
    threads: int,
    params: PartitionParams,
) -> Matrix:
    """Fast path for multi-threaded calls, full path otherwise."""
    d = KernelDescriptor.for_operands(a, b, mode, threads, params)
    if threads > 1:
        return dispatch_fast(cache, reg, d, a, b)
    return dispatch_full(reg, d, a, b)


_default_registry: KernelRegistry | None = None


def default_registry() -> KernelRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = build_registry()
    return _default_registry
