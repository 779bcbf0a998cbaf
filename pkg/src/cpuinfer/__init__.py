"""CPU inference micro-engine for Transformer-encoder matmul studies."""
from .gemm import BASELINE, PATCHED, GemmTask, PartitionParams, TransposeMode, gemm_batched, gemm_blocked, gemm_naive
from .tensor import InvalidArgument, make_rng, max_rel_err, random_matrix, transpose

__all__ = [
    "BASELINE",
    "PATCHED",
    "GemmTask",
    "InvalidArgument",
    "PartitionParams",
    "TransposeMode",
    "gemm_batched",
    "gemm_blocked",
    "gemm_naive",
    "make_rng",
    "max_rel_err",
    "random_matrix",
    "transpose",
]
