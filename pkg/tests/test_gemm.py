import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpuinfer.gemm import (
    BASELINE,
    PATCHED,
    GemmTask,
    PartitionParams,
    TransposeMode,
    gemm_batched,
    gemm_blocked,
    gemm_naive,
)
from cpuinfer.tensor import InvalidArgument, make_rng, max_rel_err, random_matrix, transpose

NN, NT = TransposeMode.NN, TransposeMode.NT


def _brute(a, b, mode):
    # float64 sum of exact products, independent of every kernel
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    if mode is NT:
        b = b.T
    m, k = a.shape
    n = b.shape[1]
    return np.array([[sum(a[i, p] * b[p, j] for p in range(k)) for j in range(n)] for i in range(m)])


def test_naive_identity():
    assert gemm_naive(np.eye(2), [[1, 2], [3, 4]], NN).tolist() == [[1, 2], [3, 4]]


def test_naive_small_products():
    assert gemm_naive([[1, 2]], [[3], [4]], NN).tolist() == [[11]]
    assert gemm_naive([[1, 2]], [[3, 4]], NT).tolist() == [[11]]


def test_naive_matches_brute_force():
    rng = make_rng(11)
    a, b = random_matrix(5, 9, rng), random_matrix(9, 7, rng)
    ref = _brute(a, b, NN)
    assert max_rel_err(gemm_naive(a, b, NN), ref) < 1e-5
    assert max_rel_err(gemm_naive(a, transpose(b), NT), ref) < 1e-5


@pytest.mark.parametrize(
    "a_shape,b_shape,mode",
    [((2, 3), (4, 2), NN), ((2, 3), (2, 4), NT), ((1, 1), (2, 1), NN)],
)
def test_shape_mismatch(a_shape, b_shape, mode):
    a, b = np.ones(a_shape, np.float32), np.ones(b_shape, np.float32)
    with pytest.raises(InvalidArgument):
        gemm_naive(a, b, mode)
    with pytest.raises(InvalidArgument):
        gemm_blocked(a, b, mode, BASELINE, 1)


def test_zero_threads_rejected():
    with pytest.raises(InvalidArgument):
        gemm_blocked(np.ones((2, 2), np.float32), np.ones((2, 2), np.float32), NN, BASELINE, 0)


def test_partition_params_validation():
    for bad in [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 4, 4)]:
        with pytest.raises(InvalidArgument):
            PartitionParams(*bad)


def test_partition_profiles():
    assert BASELINE.bk == 384 and PATCHED.bk == 64
    assert PATCHED.bm == BASELINE.bm and PATCHED.bn == BASELINE.bn
    assert PartitionParams.parse("baseline") == BASELINE
    assert PartitionParams.parse("patched") == PATCHED
    assert PartitionParams.parse("8,16,32") == PartitionParams(8, 16, 32)
    with pytest.raises(InvalidArgument):
        PartitionParams.parse("8,16")


@pytest.mark.parametrize("mode", [NN, NT])
def test_degenerate_blocking_is_naive(mode):
    rng = make_rng(2)
    a, b = random_matrix(7, 13, rng), random_matrix(13, 11, rng)
    if mode is NT:
        b = transpose(b)
    c = gemm_blocked(a, b, mode, PartitionParams(1, 1, 1), 1)
    assert max_rel_err(c, gemm_naive(a, b, mode)) <= 1e-4


def test_thread_determinism_bert_shape():
    rng = make_rng(0)
    a, b = random_matrix(8, 768, rng), random_matrix(768, 768, rng)
    p = PartitionParams(64, 64, 384)
    outs = [gemm_blocked(a, b, NN, p, t).tobytes() for t in (1, 2, 4, 16)]
    assert len(set(outs)) == 1


@pytest.mark.parametrize("bk", [64, 384])
def test_ffn_shape_against_oracle(bk):
    a = random_matrix(384, 768, make_rng(3))
    b = random_matrix(768, 3072, make_rng(4))
    c = gemm_blocked(a, b, NN, PartitionParams(64, 64, bk), 1)
    assert max_rel_err(c, gemm_naive(a, b, NN)) <= 1e-4


@pytest.mark.parametrize("dims", [(7, 13, 769), (769, 7, 13), (13, 769, 7)])
@pytest.mark.parametrize("mode", [NN, NT])
def test_ragged_edges(dims, mode):
    m, k, n = dims
    rng = make_rng(sum(dims))
    a, b = random_matrix(m, k, rng), random_matrix(k, n, rng)
    if mode is NT:
        b = transpose(b)
    ref = gemm_naive(a, b, mode)
    for p in [PartitionParams(4, 5, 6), PartitionParams(64, 64, 64), PartitionParams(3, 512, 100)]:
        assert max_rel_err(gemm_blocked(a, b, mode, p, 3), ref) <= 1e-4


dims = st.integers(1, 70)
params = st.builds(PartitionParams, st.integers(1, 80), st.integers(1, 80), st.integers(1, 80))


@settings(max_examples=60, deadline=None)
@given(dims, dims, dims, st.sampled_from([NN, NT]), params, st.integers(1, 5), st.integers(0, 2**32))
def test_blocked_matches_naive_property(m, k, n, mode, p, threads, seed):
    rng = make_rng(seed)
    a = random_matrix(m, k, rng)
    b = random_matrix(k, n, rng) if mode is NN else random_matrix(n, k, rng)
    assert max_rel_err(gemm_blocked(a, b, mode, p, threads), gemm_naive(a, b, mode)) <= 1e-4


@settings(max_examples=30, deadline=None)
@given(dims, dims, dims, params, st.integers(0, 2**32))
def test_mode_equivalence_property(m, k, n, p, seed):
    rng = make_rng(seed)
    a, b = random_matrix(m, k, rng), random_matrix(k, n, rng)
    c_nn = gemm_blocked(a, b, NN, p, 2)
    c_nt = gemm_blocked(a, transpose(b), NT, p, 2)
    assert max_rel_err(c_nn, c_nt) <= 1e-4


@settings(max_examples=30, deadline=None)
@given(dims, dims, dims, st.sampled_from([NN, NT]), params, st.integers(0, 2**32))
def test_thread_invariance_property(m, k, n, mode, p, seed):
    rng = make_rng(seed)
    a = random_matrix(m, k, rng)
    b = random_matrix(k, n, rng) if mode is NN else random_matrix(n, k, rng)
    ref = gemm_blocked(a, b, mode, p, 1).tobytes()
    for t in (2, 3, 8):
        assert gemm_blocked(a, b, mode, p, t).tobytes() == ref


def test_batched_empty():
    assert gemm_batched([], BASELINE, 4) == []


def test_batched_attention_scores():
    rng = make_rng(9)
    tasks = [GemmTask(random_matrix(8, 64, rng), random_matrix(8, 64, rng), NT) for _ in range(12)]
    out = gemm_batched(tasks, BASELINE, 4)
    assert len(out) == 12
    for t, c in zip(tasks, out):
        assert c.shape == (8, 8)
        assert c.tobytes() == gemm_blocked(t.a, t.b, NT, BASELINE, 1).tobytes()


@pytest.mark.parametrize("threads", [1, 2, 5])
def test_batched_identical_tasks(threads):
    rng = make_rng(1)
    t = GemmTask(random_matrix(9, 17, rng), random_matrix(17, 5, rng), NN)
    out = gemm_batched([t, t, t], PATCHED, threads)
    assert out[0].tobytes() == out[1].tobytes() == out[2].tobytes()


def test_batched_reports_bad_index():
    good = GemmTask(np.ones((2, 3), np.float32), np.ones((3, 2), np.float32), NN)
    bad = GemmTask(np.ones((2, 3), np.float32), np.ones((2, 2), np.float32), NN)
    with pytest.raises(InvalidArgument, match="task 1"):
        gemm_batched([good, bad, good], BASELINE, 2)
