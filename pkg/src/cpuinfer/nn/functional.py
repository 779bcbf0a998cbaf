"""Row-wise softmax, layer normalization and activations on float32 matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from ..tensor import DTYPE, InvalidArgument, Matrix, as_matrix

_INV_SQRT2 = DTYPE(1.0 / np.sqrt(2.0))


@dataclass(frozen=True)
class LayerNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    eps: float = 1e-12

    def __post_init__(self):
        if self.gamma.shape != self.beta.shape or self.gamma.ndim != 1:
            raise InvalidArgument(f"gamma/beta must be equal-length vectors, got {self.gamma.shape}, {self.beta.shape}")

    @classmethod
    def identity(cls, width: int, eps: float = 1e-12) -> "LayerNormParams":
        return cls(np.ones(width, DTYPE), np.zeros(width, DTYPE), eps)


def softmax_rows(m: Matrix) -> Matrix:
    m = as_matrix(m)
    e = np.exp(m - m.max(axis=1, keepdims=True))
    e /= e.sum(axis=1, keepdims=True)
    return e


def layer_norm(m: Matrix, p: LayerNormParams) -> Matrix:
    """(x - mean) / sqrt(var + eps) * gamma + beta over each row (population variance)."""
    m = as_matrix(m)
    if m.shape[1] != p.gamma.shape[0]:
        raise InvalidArgument(f"layer_norm: row width {m.shape[1]} != gamma length {p.gamma.shape[0]}")
    mean = m.mean(axis=1, keepdims=True, dtype=np.float64)
    centered = m - mean
    var = np.mean(centered * centered, axis=1, keepdims=True)
    out = centered / np.sqrt(var + p.eps)
    return np.ascontiguousarray(out * p.gamma + p.beta, dtype=DTYPE)


def gelu(m: Matrix) -> Matrix:
    """Exact erf form: x * Phi(x)."""
    m = as_matrix(m)
    return m * DTYPE(0.5) * (DTYPE(1.0) + erf(m * _INV_SQRT2))


def tanh(m: Matrix) -> Matrix:
    return np.tanh(as_matrix(m))
