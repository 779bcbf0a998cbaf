import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cpuinfer.tensor import InvalidArgument, as_matrix, make_rng, max_rel_err, random_matrix, transpose

# recorded once from PCG64(42)
GOLDEN_2x3_SEED42 = [
    float.fromhex(h)
    for h in ("-0x1.a49b68p-2", "0x1.1887ecp-2", "0x1.3c8ff8p-3", "-0x1.f4b54p-5", "-0x1.125eap-4", "0x1.6f3448p-2")
]

small_matrices = arrays(
    np.float32,
    st.tuples(st.integers(1, 12), st.integers(1, 12)),
    elements=st.floats(-1e3, 1e3, width=32),
)


def test_random_matrix_deterministic_1x1():
    a = random_matrix(1, 1, make_rng(7))
    b = random_matrix(1, 1, make_rng(7))
    assert a.shape == (1, 1)
    assert a.tobytes() == b.tobytes()


def test_random_matrix_range():
    m = random_matrix(8, 768, make_rng(1))
    assert m.shape == (8, 768) and m.dtype == np.float32 and m.flags.c_contiguous
    assert m.min() >= -0.5 and m.max() < 0.5


def test_random_matrix_golden():
    m = random_matrix(2, 3, make_rng(42))
    assert m.ravel().tolist() == GOLDEN_2x3_SEED42


def test_random_matrix_advances_stream():
    rng = make_rng(3)
    assert not np.array_equal(random_matrix(4, 4, rng), random_matrix(4, 4, rng))


@pytest.mark.parametrize("shape", [(0, 3), (3, 0), (0, 0)])
def test_random_matrix_zero_dim(shape):
    with pytest.raises(InvalidArgument):
        random_matrix(*shape, make_rng(0))


def test_transpose_cases():
    assert transpose([[5.0]]).tolist() == [[5.0]]
    t = transpose([[1, 2, 3], [4, 5, 6]])
    assert t.shape == (3, 2)
    assert t.tolist() == [[1, 4], [2, 5], [3, 6]]
    assert t.flags.c_contiguous


def test_transpose_involution_17x31():
    m = random_matrix(17, 31, make_rng(5))
    assert transpose(transpose(m)).tobytes() == m.tobytes()


def test_max_rel_err_cases():
    m = random_matrix(3, 4, make_rng(0))
    assert max_rel_err(m, m) == 0.0
    assert max_rel_err([[1.0]], [[1.001]]) == pytest.approx(0.000999, abs=1e-6)
    assert max_rel_err([[0.0]], [[0.0]]) == 0.0


def test_max_rel_err_shape_mismatch():
    with pytest.raises(InvalidArgument):
        max_rel_err(np.zeros((2, 2)), np.zeros((2, 3)))


def test_as_matrix_rejects_bad_rank():
    with pytest.raises(InvalidArgument):
        as_matrix(np.zeros(3))


@given(small_matrices)
def test_transpose_involution_property(m):
    assert transpose(transpose(m)).tobytes() == m.tobytes()


@given(small_matrices, st.integers(0, 2**32))
def test_max_rel_err_symmetric(a, seed):
    b = a + random_matrix(*a.shape, make_rng(seed))
    assert max_rel_err(a, b) == max_rel_err(b, a)


@settings(max_examples=25)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**63))
def test_random_matrix_reproducible(rows, cols, seed):
    a = random_matrix(rows, cols, make_rng(seed))
    b = random_matrix(rows, cols, make_rng(seed))
    assert a.tobytes() == b.tobytes()
