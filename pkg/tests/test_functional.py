import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cpuinfer.nn.functional import LayerNormParams, gelu, layer_norm, softmax_rows
from cpuinfer.tensor import InvalidArgument


def phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


rows = arrays(
    np.float32,
    st.tuples(st.integers(1, 6), st.integers(2, 40)),
    elements=st.floats(-50, 50, width=32),
)


def test_softmax_cases():
    np.testing.assert_allclose(softmax_rows([[0.0, 0.0]]), [[0.5, 0.5]], atol=1e-7)
    with np.errstate(over="raise"):
        np.testing.assert_allclose(softmax_rows([[1000.0, 1000.0]]), [[0.5, 0.5]], atol=1e-7)
    np.testing.assert_allclose(softmax_rows([[0.0, math.log(3.0)]]), [[0.25, 0.75]], atol=1e-6)


@given(rows)
def test_softmax_rows_are_distributions(m):
    s = softmax_rows(m)
    assert np.all(s >= 0) and np.all(s <= 1)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-5)


def test_layer_norm_constant_row():
    out = layer_norm(np.full((2, 5), 3.25, np.float32), LayerNormParams.identity(5))
    assert np.all(out == 0)


def test_layer_norm_hand_case():
    out = layer_norm([[1.0, 3.0]], LayerNormParams.identity(2, eps=1e-12))
    np.testing.assert_allclose(out, [[-1.0, 1.0]], atol=1e-3)


def test_layer_norm_gamma_beta():
    p = LayerNormParams(np.array([2.0, 2.0], np.float32), np.array([1.0, -1.0], np.float32), 1e-12)
    np.testing.assert_allclose(layer_norm([[1.0, 3.0]], p), [[-1.0, 1.0]], atol=1e-5)


def test_layer_norm_width_mismatch():
    with pytest.raises(InvalidArgument):
        layer_norm(np.ones((2, 3), np.float32), LayerNormParams.identity(4))


@given(rows)
def test_layer_norm_moments(m):
    m = m + np.linspace(0, 1, m.shape[1], dtype=np.float32)  # never constant
    out = layer_norm(m, LayerNormParams.identity(m.shape[1]))
    assert np.all(np.abs(out.mean(axis=1)) <= 1e-5)
    np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-3)


@pytest.mark.parametrize("x", [-6.0, -1.5, -0.3, 0.0, 0.7, 1.0, 2.5, 10.0])
def test_gelu_against_erf_oracle(x):
    assert gelu([[x]])[0, 0] == pytest.approx(x * phi(x), abs=1e-4)


def test_gelu_limits():
    assert gelu([[0.0]])[0, 0] == 0.0
    assert gelu([[10.0]])[0, 0] == pytest.approx(10.0, abs=1e-4)
    assert abs(gelu([[-10.0]])[0, 0]) < 1e-4
    assert gelu([[1.0]])[0, 0] == pytest.approx(0.8413, abs=1e-4)
