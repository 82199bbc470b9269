import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tabuq import (AdamState, SeededRng, activation, adam_step, anchored_mean,
                   as_matrix, dropout_mask, finite_difference_gradient, matmul,
                   minimize_gd, sigmoid)
from tabuq.errors import ParameterError, ShapeError

finite_floats = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_as_matrix_coerces_to_2d_float64():
    m = as_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.float64 and m.shape == (2, 2)
    with pytest.raises(ShapeError):
        as_matrix([1.0, 2.0, 3.0])


def test_matmul_identity():
    m = np.arange(9, dtype=np.float64).reshape(3, 3)
    np.testing.assert_array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_example():
    out = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.0], [1.0]]))
    np.testing.assert_array_equal(out, [[3.0], [7.0]])


def test_matmul_empty_inner_dimension():
    np.testing.assert_array_equal(matmul(np.zeros((1, 0)), np.zeros((0, 1))),
                                  [[0.0]])


def test_matmul_mismatch_names_both_shapes():
    with pytest.raises(ShapeError, match=r"2.*3|\(2, 2\).*\(3, 1\)"):
        matmul(np.zeros((2, 2)), np.zeros((3, 1)))


def test_sigmoid_basics():
    assert sigmoid(np.array(0.0)) == 0.5
    assert sigmoid(np.array(1000.0)) == 1.0
    assert sigmoid(np.array(-1000.0)) == 0.0


@given(hnp.arrays(np.float64, 7, elements=finite_floats))
def test_sigmoid_symmetry_and_range(x):
    s = sigmoid(x)
    assert ((0 <= s) & (s <= 1)).all()
    np.testing.assert_allclose(s + sigmoid(-x), 1.0, atol=1e-12)


def test_activation_relu():
    value, deriv = activation("relu", np.array([-3.0, 0.0, 2.0]))
    np.testing.assert_array_equal(value, [0.0, 0.0, 2.0])
    np.testing.assert_array_equal(deriv, [0.0, 0.0, 1.0])


def test_activation_sigmoid():
    value, deriv = activation("sigmoid", np.array([0.0]))
    assert value[0] == 0.5 and deriv[0] == 0.25


def test_activation_unknown_kind():
    with pytest.raises(ParameterError, match="tanh"):
        activation("tanh", np.zeros(1))


def test_dropout_mask_rate_zero_is_identity():
    np.testing.assert_array_equal(dropout_mask(SeededRng(0), (4, 4), 0.0),
                                  np.ones((4, 4)))


def test_dropout_mask_values_and_mean():
    mask = dropout_mask(SeededRng(0), (100_000,), 0.5)
    assert set(np.unique(mask)) <= {0.0, 2.0}
    assert abs(mask.mean() - 1.0) < 0.01


def test_dropout_mask_deterministic():
    np.testing.assert_array_equal(dropout_mask(SeededRng(5), (8, 8), 0.3),
                                  dropout_mask(SeededRng(5), (8, 8), 0.3))


@pytest.mark.parametrize("rate", [1.0, 1.5, -0.1])
def test_dropout_mask_bad_rate(rate):
    with pytest.raises(ParameterError):
        dropout_mask(SeededRng(0), (2,), rate)


def test_adam_zero_gradient_keeps_params():
    p = np.array([1.0, -2.0])
    state = AdamState.for_params(p, lr=1e-3)
    p2, state = adam_step(p, np.zeros(2), state)
    np.testing.assert_array_equal(p2, p)
    assert state.t == 1


def test_adam_first_step_magnitude():
    # At t=1 the bias-corrected update is lr * g / (|g| + eps'), i.e. ~lr.
    p = np.array([0.0])
    state = AdamState.for_params(p, lr=1e-3)
    p2, _ = adam_step(p, np.array([0.5]), state)
    assert abs(abs(p2[0]) - 1e-3) < 1e-6


def test_adam_constant_gradient_step_approaches_lr():
    p = np.array([0.0])
    state = AdamState.for_params(p, lr=1e-3)
    for _ in range(500):
        prev = p.copy()
        p, state = adam_step(p, np.array([0.5]), state)
    assert abs(abs(p[0] - prev[0]) - 1e-3) < 1e-5
    assert state.t == 500


def test_adam_shape_mismatch():
    state = AdamState.for_params(np.zeros(3), lr=1e-3)
    with pytest.raises(ShapeError):
        adam_step(np.zeros(3), np.zeros(2), state)


def test_adam_descends_quadratic():
    p = np.array([3.0, -2.0])
    state = AdamState.for_params(p, lr=1e-2)
    for _ in range(3000):
        p, state = adam_step(p, 2 * p, state)
    assert np.abs(p).max() < 1e-3


def test_finite_difference_on_square():
    g = finite_difference_gradient(lambda x: float((x ** 2).sum()),
                                   np.array([[3.0]]))
    assert abs(g[0, 0] - 6.0) < 1e-8


def test_finite_difference_constant():
    g = finite_difference_gradient(lambda x: 1.0, np.zeros((2, 3)))
    np.testing.assert_array_equal(g, np.zeros((2, 3)))


def test_finite_difference_sigmoid_slope():
    g = finite_difference_gradient(lambda x: float(sigmoid(x)[0, 0]),
                                   np.zeros((1, 1)))
    assert abs(g[0, 0] - 0.25) < 1e-8


def test_anchored_mean_of_identical_rows_is_bitwise_first():
    row = SeededRng(0).normal(10)
    stack = np.vstack([row, row, row])
    np.testing.assert_array_equal(anchored_mean(stack), row)


@given(hnp.arrays(np.float64, (4, 6), elements=finite_floats))
def test_anchored_mean_matches_numpy(values):
    np.testing.assert_allclose(anchored_mean(values), values.mean(axis=0),
                               rtol=1e-12, atol=1e-12)


def test_minimize_gd_solves_quadratic():
    def f_and_grad(x):
        return float(((x - 3.0) ** 2).sum()), 2 * (x - 3.0)

    x, gnorm, iters = minimize_gd(f_and_grad, np.zeros(4), tol=1e-10,
                                  max_iter=10_000)
    np.testing.assert_allclose(x, 3.0, atol=1e-9)
    assert gnorm <= 1e-10
    assert iters <= 10_000


def test_minimize_gd_respects_iteration_cap():
    # A quartic never hits gradient norm exactly 0, so tol=0 runs to the cap.
    def f_and_grad(x):
        return float((x ** 4).sum()), 4 * x ** 3

    _, gnorm, iters = minimize_gd(f_and_grad, np.full(3, 100.0), tol=0.0,
                                  max_iter=5)
    assert iters == 5
    assert gnorm > 0.0


def test_minimize_gd_monotone_under_armijo():
    # Backtracking line search never accepts an increase of f.
    def f_and_grad(x):
        return float(np.cosh(x).sum()), np.sinh(x)

    losses = []
    x = np.array([4.0, -3.0])
    for _ in range(50):
        x, _, _ = minimize_gd(f_and_grad, x, tol=0.0, max_iter=1)
        losses.append(f_and_grad(x)[0])
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
