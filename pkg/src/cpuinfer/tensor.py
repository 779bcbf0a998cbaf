"""Dense float32 matrices, seeded generation and comparison helpers.

A "matrix" throughout the package is a 2-D, C-contiguous ``numpy.float32``
array with at least one row and one column.
"""
from __future__ import annotations

import numpy as np

Matrix = np.ndarray
Rng = np.random.Generator

DTYPE = np.float32


class InvalidArgument(ValueError):
    """Raised when an operation receives arguments violating its contract."""


def make_rng(seed: int) -> Rng:
    """PCG64 generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(x, name: str = "matrix") -> Matrix:
    """Return ``x`` as a row-major float32 matrix, copying only when needed."""
    m = np.ascontiguousarray(x, dtype=DTYPE)
    if m.ndim != 2:
        raise InvalidArgument(f"{name}: expected 2-D array, got {m.ndim}-D")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidArgument(f"{name}: dimensions must be >= 1, got {m.shape}")
    return m


def is_matrix(x) -> bool:
    return (
        isinstance(x, np.ndarray)
        and x.dtype == DTYPE
        and x.ndim == 2
        and x.flags.c_contiguous
        and x.shape[0] >= 1
        and x.shape[1] >= 1
    )


def random_matrix(rows: int, cols: int, rng: Rng) -> Matrix:
    """Uniform values in [-0.5, 0.5).

    The generator yields float32 multiples of 2**-24 in [0, 1), so the shift
    by 0.5 is exact and the upper bound stays open.
    """
    if rows < 1 or cols < 1:
        raise InvalidArgument(f"random_matrix: dimensions must be >= 1, got ({rows}, {cols})")
    m = rng.random((rows, cols), dtype=DTYPE)
    m -= DTYPE(0.5)
    return m


def transpose(m: Matrix) -> Matrix:
    """Materialized transpose (a new row-major buffer, never a view)."""
    m = as_matrix(m)
    return np.ascontiguousarray(m.T)


def max_rel_err(a: Matrix, b: Matrix) -> float:
    """max |a-b| / max(|a|, |b|, 1e-6), evaluated in float64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgument(f"max_rel_err: shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-6)
    return float(np.max(np.abs(a - b) / denom))
