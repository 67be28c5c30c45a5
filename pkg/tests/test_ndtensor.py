import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weekcast.ndtensor import (
    Activation,
    NonFiniteError,
    ShapeError,
    activate,
    activate_grad,
    check_finite,
    matmul,
    tensor_create,
)

KINDS = list(Activation)


def test_tensor_create_zero_fill():
    t = tensor_create((2, 2), 0.0)
    assert t.shape == (2, 2)
    assert t.dtype == np.float64
    assert np.all(t == 0)


def test_tensor_create_copies_sequence():
    np.testing.assert_array_equal(tensor_create((3,), [1, 2, 3]), [1.0, 2.0, 3.0])


def test_tensor_create_row_major():
    t = tensor_create((2, 3), range(6))
    assert t[1, 0] == 3.0


def test_tensor_create_length_mismatch():
    with pytest.raises(ShapeError):
        tensor_create((2,), [1, 2, 3])


def test_tensor_create_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        tensor_create((2,), [1.0, math.nan])


def test_matmul_identity():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(matmul(np.eye(2), b), b)


def test_matmul_hand_sum():
    # 1*3 + 2*4
    assert matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]])).tolist() == [[11.0]]


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 2)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_matmul_associative(seed):
    rng = np.random.default_rng(seed)
    n, m, k, p = rng.integers(1, 6, size=4)
    A, B, C = rng.normal(size=(n, m)), rng.normal(size=(m, k)), rng.normal(size=(k, p))
    assert np.max(np.abs(matmul(matmul(A, B), C) - matmul(A, matmul(B, C)))) < 1e-9


def test_relu():
    np.testing.assert_array_equal(activate(np.array([-1.0, 0.0, 2.0]), "relu"), [0.0, 0.0, 2.0])


def test_sigmoid_symmetry_point():
    assert activate(np.array([0.0]), Activation.SIGMOID)[0] == 0.5


def test_tanh_value():
    # 30-digit reference: 0.462117157260009758...
    assert activate(np.array([0.5]), "tanh")[0] == pytest.approx(0.46211715726000976, abs=1e-15)


def test_identity_passthrough():
    x = np.array([[1.5, -2.0]])
    np.testing.assert_array_equal(activate(x, "identity"), x)


def test_relu_grad():
    np.testing.assert_array_equal(activate_grad("relu", np.array([-1.0, 2.0])), [0.0, 1.0])


def test_relu_grad_at_zero_is_zero():
    assert activate_grad("relu", np.array([0.0]))[0] == 0.0


def test_sigmoid_grad_at_zero():
    assert activate_grad("sigmoid", np.array([0.0]))[0] == 0.25


def test_tanh_grad_value():
    # 30-digit reference: 0.786447732965927410...
    assert activate_grad("tanh", np.array([0.5]))[0] == pytest.approx(0.7864477329659274, abs=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_activate_grad_matches_finite_differences(kind):
    rng = np.random.default_rng(11)
    x = rng.uniform(-6, 6, size=100)
    if kind is Activation.RELU:
        x = x[np.abs(x) >= 1e-3]
    h = 1e-6
    numeric = (activate(x + h, kind) - activate(x - h, kind)) / (2 * h)
    analytic = activate_grad(kind, x)
    rel = np.abs(numeric - analytic) / np.maximum(np.abs(analytic), 1e-12)
    # entries with vanishing derivative are compared absolutely
    rel = np.where(np.abs(analytic) < 1e-12, np.abs(numeric - analytic), rel)
    assert rel.max() < 1e-6


@pytest.mark.parametrize("kind", KINDS)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_elementwise_ops_keep_shape_and_finiteness(kind, values):
    x = np.array(values).reshape(-1, 1)
    y = activate(x, kind)
    g = activate_grad(kind, x)
    assert y.shape == x.shape and g.shape == x.shape
    check_finite(y)
    check_finite(g)
