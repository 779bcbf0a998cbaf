"""Per-category wall-time accounting for a forward pass.

Every timed scope is charged to one module category (what kind of operator
ran) and one sub-layer category (where in the encoder it ran), so the same
measurements render both breakdowns.

Inside ``total()`` scopes are contiguous: a scope starts where the previous
one ended, so interpreter glue between two operators is charged to the one
that follows it rather than falling through the cracks.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from time import perf_counter_ns
from typing import Callable

MODULES = ("linear", "bmm", "softmax", "layernorm", "activation", "other")
SUBLAYERS = (
    "attention.self",
    "attention.dense",
    "attention.layernorm",
    "attention.other",
    "ffn.dense1",
    "ffn.dense2",
    "ffn.layernorm",
    "ffn.other",
    "other",
)

# Allowed excess of the category sum over the total (scope overlap slack).
OVERLAP_SLACK = 1.02


@dataclass
class TimingBreakdown:
    by_module: dict[str, int] = field(default_factory=lambda: dict.fromkeys(MODULES, 0))
    by_sublayer: dict[str, int] = field(default_factory=lambda: dict.fromkeys(SUBLAYERS, 0))
    total_ns: int = 0
    clock: Callable[[], int] = field(default=perf_counter_ns, repr=False, compare=False)
    _mark: int | None = field(default=None, repr=False, compare=False)

    def scope(self, module: str, sublayer: str) -> "_Scope":
        return _Scope(self, module, sublayer)

    @contextmanager
    def total(self):
        t0 = self._mark = self.clock()
        try:
            yield
        finally:
            self.total_ns += self.clock() - t0
            self._mark = None

    def covered_ns(self) -> int:
        return sum(self.by_module.values())

    def merge(self, other: "TimingBreakdown") -> None:
        for k, v in other.by_module.items():
            self.by_module[k] = self.by_module.get(k, 0) + v
        for k, v in other.by_sublayer.items():
            self.by_sublayer[k] = self.by_sublayer.get(k, 0) + v
        self.total_ns += other.total_ns

    def shares(self) -> dict[str, float]:
        """Module categories as fractions of the total."""
        if self.total_ns <= 0:
            return dict.fromkeys(self.by_module, 0.0)
        return {k: v / self.total_ns for k, v in self.by_module.items()}

    def matmul_share(self) -> float:
        if self.total_ns <= 0:
            return 0.0
        return (self.by_module["linear"] + self.by_module["bmm"]) / self.total_ns


class _Scope:
    __slots__ = ("bd", "module", "sublayer", "t0")

    def __init__(self, bd: TimingBreakdown, module: str, sublayer: str):
        self.bd = bd
        self.module = module
        self.sublayer = sublayer

    def __enter__(self):
        bd = self.bd
        self.t0 = bd.clock() if bd._mark is None else bd._mark

    def __exit__(self, *exc):
        bd = self.bd
        now = bd.clock()
        dt = now - self.t0
        bd.by_module[self.module] += dt
        bd.by_sublayer[self.sublayer] += dt
        if bd._mark is not None:
            bd._mark = now
        return False
