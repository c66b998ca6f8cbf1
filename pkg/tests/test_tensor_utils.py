import numpy as np
import pytest

import tensor_utils as T
from errors import DimensionError, EmptySupportError, LabelIndexError, ShapeError


def grad_of(f, x):
    x.zero_grad()
    with T.Tape():
        loss = f()
    T.backward(loss)
    return x.grad


def test_matmul_examples():
    identity = T.constant(np.eye(2))
    m = T.constant([[5.0, 6.0], [7.0, 8.0]])
    np.testing.assert_array_equal(T.matmul(identity, m).data, [[5, 6], [7, 8]])
    np.testing.assert_array_equal(T.matmul(T.constant([[1.0, 2.0], [3.0, 4.0]]), T.constant([[1.0], [1.0]])).data,
                                  [[3], [7]])
    np.testing.assert_array_equal(T.matmul(T.constant([[2.0]]), T.constant([[3.0]])).data, [[6]])


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r'\(2, 3\).*\(2, 2\)'):
        T.matmul(T.constant(np.ones((2, 3))), T.constant(np.ones((2, 2))))


def test_elementwise_examples():
    assert T.elementwise('sigmoid', T.constant([0.0])).data[0] == 0.5
    assert T.elementwise('tanh', T.constant([0.0])).data[0] == 0.0
    np.testing.assert_array_equal(T.elementwise('mul', T.constant([1.0, 2.0]), T.constant([3.0, 4.0])).data, [3, 8])

    with pytest.raises(DimensionError):
        T.elementwise('add', T.constant([1.0, 2.0]), T.constant([1.0]))
    with pytest.raises(ValueError):
        T.elementwise('relu', T.constant([1.0]))


def test_masked_softmax_examples():
    np.testing.assert_allclose(T.masked_softmax(T.constant([0.0, 0.0, 0.0]), [True] * 3).data, [1 / 3] * 3)
    np.testing.assert_allclose(T.masked_softmax(T.constant([np.log(2.0), 0.0]), [True, True]).data, [2 / 3, 1 / 3])
    np.testing.assert_array_equal(T.masked_softmax(T.constant([5.0, 7.0]), [True, False]).data, [1.0, 0.0])

    with pytest.raises(EmptySupportError):
        T.masked_softmax(T.constant([1.0, 2.0]), [False, False])


def test_masked_softmax_random_cases():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = rng.integers(1, 8)
        logits = rng.normal(scale=rng.uniform(0.1, 50.0), size=n)
        mask = rng.random(n) < 0.6
        mask[rng.integers(n)] = True

        out = T.masked_softmax(T.constant(logits), mask).data
        assert (out >= 0).all()
        assert abs(out[mask].sum() - 1.0) <= 1e-12
        assert (out[~mask] == 0.0).all()

        shifted = T.masked_softmax(T.constant(logits + rng.uniform(-100, 100)), mask).data
        assert np.abs(shifted - out).max() < 1e-12


def test_masked_mean_examples():
    H = T.constant([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(T.masked_mean(H, [True, True]).data, [2, 3])
    np.testing.assert_array_equal(T.masked_mean(H, [True, False]).data, [1, 2])
    np.testing.assert_array_equal(T.masked_mean(T.constant([[5.0, 5.0]]), [True]).data, [5, 5])

    with pytest.raises(EmptySupportError):
        T.masked_mean(H, [False, False])


def test_concat_forward_and_backward():
    a = T.parameter([1.0, 2.0])
    b = T.parameter([3.0])
    weights = T.constant([10.0, 20.0, 30.0])

    with T.Tape():
        joined = T.concat([a, b])
        loss = T.reduce_sum(T.mul(joined, weights))
    T.backward(loss)

    np.testing.assert_array_equal(joined.data, [1, 2, 3])
    np.testing.assert_array_equal(a.grad, [10, 20])
    np.testing.assert_array_equal(b.grad, [30])


def test_concat_of_one_tensor_is_that_tensor():
    a = T.constant([1.0, 2.0])
    assert T.concat([a]) is a


def test_concat_incompatible_shapes():
    with pytest.raises(DimensionError):
        T.concat([T.constant(np.ones((2, 2))), T.constant(np.ones((3, 2)))], axis=-1)


def test_cross_entropy_examples():
    assert T.cross_entropy(T.constant([1 / 3] * 3), 2).item() == pytest.approx(np.log(3.0))
    assert T.cross_entropy(T.constant([1.0, 0.0, 0.0]), 0).item() == pytest.approx(0.0)
    assert T.cross_entropy(T.constant([0.5, 0.5]), 1).item() == pytest.approx(np.log(2.0))

    # a zero probability is clamped instead of giving inf
    assert T.cross_entropy(T.constant([1.0, 0.0]), 1).item() == pytest.approx(-np.log(T.LOG_EPSILON))

    with pytest.raises(LabelIndexError):
        T.cross_entropy(T.constant([0.5, 0.5]), 2)


def test_backward_derivatives_at_zero():
    x = T.parameter([0.0])
    assert grad_of(lambda: T.reduce_sum(T.tanh(x)), x)[0] == 1.0
    assert grad_of(lambda: T.reduce_sum(T.sigmoid(x)), x)[0] == 0.25


def test_backward_sums_fan_out():
    x = T.parameter([1.5, -2.0])
    np.testing.assert_array_equal(grad_of(lambda: T.reduce_sum(T.add(x, x)), x), [2.0, 2.0])


def test_backward_needs_a_scalar():
    x = T.parameter([1.0, 2.0])
    with T.Tape():
        y = T.tanh(x)
    with pytest.raises(ShapeError):
        T.backward(y)


def test_no_graph_outside_a_tape():
    x = T.parameter([1.0])
    loss = T.reduce_sum(T.tanh(x))
    T.backward(loss)
    assert x.grad is None


def test_softmax_cross_entropy_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    logits = T.parameter(rng.normal(size=(4, 3)), name='logits')
    labels = np.array([0, 2, 1, 1])

    report = T.grad_check(lambda: T.cross_entropy(T.softmax(logits), labels), [logits])
    assert report.passed


def test_grad_check_sum_of_sigmoids():
    x = T.parameter(np.zeros(5), name='x')
    report = T.grad_check(lambda: T.reduce_sum(T.sigmoid(x)), {'x': x})

    assert report.passed
    assert report.entries[0].max_rel_error < 1e-6


def test_grad_check_constant_function():
    x = T.parameter(np.ones(3), name='x')
    report = T.grad_check(lambda: T.reduce_sum(T.constant(np.ones(3))), [x])

    assert report.passed
    assert report.entries[0].max_rel_error == 0.0


def test_grad_check_catches_a_wrong_backward_rule():
    def broken_tanh(x):
        out = np.tanh(x.data)
        # derivative taken as 1 + tanh^2 instead of 1 - tanh^2
        return T.apply_op('broken_tanh', [x], out, lambda g: (g * (1.0 + out * out),))

    x = T.parameter([0.5, -1.0, 1.5, 2.0], name='x')
    report = T.grad_check(lambda: T.reduce_sum(broken_tanh(x)), [x])

    assert not report.passed
    assert report.failures()[0].max_rel_error > 100 * report.tol


def test_relative_error():
    assert T.relative_error(2.0, 1.0) == pytest.approx(1.0 / 3.0)
    assert T.relative_error(0.0, 0.0) == 0.0
    assert T.relative_error(-1.0, 1.0) == 1.0
    # below the floor the difference is measured against the floor
    assert T.relative_error(1e-9, 0.0) == pytest.approx(1e-4)


def test_grad_check_catches_a_doubled_gradient_of_small_magnitude():
    def doubled_sigmoid(x):
        out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
        return T.apply_op('doubled_sigmoid', [x], out, lambda g: (2.0 * g * out * (1.0 - out),))

    x = T.parameter(np.zeros(4), name='x')
    report = T.grad_check(lambda: T.scale(T.reduce_sum(doubled_sigmoid(x)), 1e-4), [x])

    assert not report.passed
    assert report.entries[0].max_rel_error == pytest.approx(1.0 / 3.0, rel=1e-4)


def _op_cases(rng):
    A = T.parameter(rng.normal(size=(2, 3)), name='A')
    B = T.parameter(rng.normal(size=(3, 2)), name='B')
    v = T.parameter(rng.normal(size=3), name='v')
    w = T.parameter(rng.normal(size=(2, 3)), name='w')
    H = T.parameter(rng.normal(size=(2, 4, 3)), name='H')
    bias = T.parameter(rng.normal(size=1), name='bias')
    mask = np.array([[True, True, False, True], [True, False, False, False]])
    table = T.parameter(rng.normal(size=(5, 3)), name='table')
    ramp = T.constant(np.arange(8.0).reshape(2, 4))

    return [
        (lambda: T.reduce_sum(T.matmul(A, B)), [A, B]),
        (lambda: T.reduce_sum(T.tanh(T.mul(A, w))), [A, w]),
        (lambda: T.reduce_mean(T.sigmoid(T.add_bias(A, v))), [A, v]),
        (lambda: T.reduce_sum(T.tanh(T.add_scalar(T.batch_dot(H, A), bias))), [H, A, bias]),
        (lambda: T.reduce_sum(T.mul(T.masked_softmax(T.batch_dot(H, A), mask), ramp)), [H, A]),
        (lambda: T.reduce_sum(T.tanh(T.masked_mean(H, mask))), [H]),
        (lambda: T.reduce_sum(T.tanh(T.weighted_sum(T.softmax(T.batch_dot(H, A)), H))), [H, A]),
        (lambda: T.reduce_sum(T.tanh(T.select_rows(mask[:, 0] & np.array([True, False]), A, w))), [A, w]),
        (lambda: T.reduce_sum(T.tanh(T.stack([A, w], axis=1))), [A, w]),
        (lambda: T.reduce_sum(T.tanh(T.concat([A, w], axis=0))), [A, w]),
        (lambda: T.reduce_sum(T.tanh(T.gather(table, [[0, 2, 2], [4, 1, 0]]))), [table]),
        (lambda: T.reduce_sum(T.scale(T.tanh(A), -2.5)), [A]),
    ]


@pytest.mark.parametrize('case', range(12))
def test_every_op_passes_grad_check_at_random_points(case):
    rng = np.random.default_rng(case)
    for _ in range(20):
        f, params = _op_cases(rng)[case]
        assert T.grad_check(f, params, step=1e-5, tol=1e-4).passed


def test_dropout_is_reproducible_and_identity_at_zero_rate():
    x = T.constant(np.ones((3, 4)))
    assert T.dropout(x, 0.0, np.random.default_rng(0)) is x

    first = T.dropout(x, 0.5, np.random.default_rng(5)).data
    second = T.dropout(x, 0.5, np.random.default_rng(5)).data
    np.testing.assert_array_equal(first, second)
    assert set(np.unique(first)) <= {0.0, 2.0}
