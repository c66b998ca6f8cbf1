import numpy as np
import pytest

import tensor_utils as T
from encoder_utils import (GATES, LSTMParams, RhoHotConfig, bilstm_encode, lstm_step, option_encode,
                           option_match_encode, rho_hot_encode, run_lstm)
from errors import ConfigError, EmptySupportError
from text_utils import Lexicon, default_lexicon

WORD_DIM, LEX_DIM, HIDDEN = 3, 2, 4


def zero_params(word_dim=1, lex_dim=1, hidden=1):
    width = 2 * hidden + word_dim + lex_dim
    weights = {f'W_{g}': T.parameter(np.zeros((width, hidden))) for g in GATES}
    biases = {f'b_{g}': T.parameter(np.zeros(hidden)) for g in GATES}
    return LSTMParams(**weights, **biases)


def zero_step(params, candidate):
    zero = T.constant(np.zeros((1, 1)))
    return lstm_step(params, zero, zero, zero, zero, candidate)


def random_inputs(rng, batch, length):
    xs = [T.constant(rng.normal(size=(batch, WORD_DIM))) for _ in range(length)]
    lex = rng.choice([0.0, 0.5], size=(batch, length, LEX_DIM))
    return xs, lex


@pytest.mark.parametrize('k, rho', [(0, 1.0), (1, 0.0), (1, 1.5)])
def test_rho_hot_config_validation(k, rho):
    with pytest.raises(ConfigError):
        RhoHotConfig(k=k, rho=rho)


def test_rho_hot_encode_examples():
    lexicon = default_lexicon()
    np.testing.assert_array_equal(rho_hot_encode('yes', lexicon, RhoHotConfig(k=2, rho=0.5)),
                                  [0.5, 0.5] + [0.0] * 10)
    np.testing.assert_array_equal(rho_hot_encode('teapot', lexicon, RhoHotConfig(k=3, rho=0.5)), np.zeros(18))

    both = Lexicon.from_dict({'affirmative': ['fine'], 'positive': ['fine']})
    np.testing.assert_array_equal(rho_hot_encode('fine', both, RhoHotConfig(k=1, rho=1.0)), [1, 0, 0, 1, 0, 0])


@pytest.mark.parametrize('k', [1, 2, 4, 8, 16])
def test_rho_hot_encode_nonzero_count(k):
    lexicon = Lexicon.from_dict({'privative': ['not'], 'negative': ['not'], 'supposed': ['not']})
    vector = rho_hot_encode('not', lexicon, RhoHotConfig(k=k, rho=0.7))

    assert np.count_nonzero(vector) == 3 * k
    assert set(vector[vector != 0]) == {0.7}


def test_option_encode_examples():
    np.testing.assert_array_equal(option_encode(3, (2, 4), RhoHotConfig(k=2, rho=0.3)), [0.3, 0.3])
    np.testing.assert_array_equal(option_encode(4, (2, 4), RhoHotConfig(k=2, rho=0.3)), [0.0, 0.0])
    np.testing.assert_array_equal(option_encode(0, (0, 1), RhoHotConfig(k=1, rho=1.0)), [1.0])


def test_option_match_encode():
    cfg = RhoHotConfig(k=3, rho=0.4)
    np.testing.assert_array_equal(option_match_encode('tea', frozenset({'green', 'tea'}), cfg), [0.4, 0.4, 0.4])
    np.testing.assert_array_equal(option_match_encode('coffee', frozenset({'tea'}), cfg), np.zeros(3))
    np.testing.assert_array_equal(option_match_encode('tea', frozenset(), cfg), np.zeros(3))


def test_lstm_step_all_zero():
    c, h = zero_step(zero_params(), 'tanh')
    assert c.data[0, 0] == 0.0
    assert h.data[0, 0] == 0.0


def test_lstm_step_sigmoid_candidate():
    c, h = zero_step(zero_params(), 'sigmoid')
    assert c.data[0, 0] == pytest.approx(0.25)
    assert h.data[0, 0] == pytest.approx(0.5 * np.tanh(0.25))
    assert h.data[0, 0] == pytest.approx(0.12246, abs=1e-5)


def test_lstm_step_saturated_candidate():
    params = zero_params()
    params.b_d.data[:] = 50.0
    c, h = zero_step(params, 'tanh')

    assert c.data[0, 0] == pytest.approx(0.5)
    assert h.data[0, 0] == pytest.approx(0.23106, abs=1e-5)


def test_lstm_step_rejects_unknown_candidate():
    with pytest.raises(ConfigError):
        zero_step(zero_params(), 'relu')


def test_lstm_init_shapes_and_forget_bias():
    params = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, np.random.default_rng(0))

    assert params.input_size == 2 * HIDDEN + WORD_DIM + LEX_DIM
    assert params.hidden_size == HIDDEN
    np.testing.assert_array_equal(params.b_f.data, np.ones(HIDDEN))
    np.testing.assert_array_equal(params.b_i.data, np.zeros(HIDDEN))
    assert np.abs(params.W_o.data).max() <= 1.0 / np.sqrt(HIDDEN)


def test_single_token_backward_equals_forward(rng):
    params = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, rng)
    xs, lex = random_inputs(rng, 1, 1)
    encoded = bilstm_encode(xs, lex, np.ones((1, 1), dtype=bool), params, params)

    row = encoded.H_out.data[0, 0]
    np.testing.assert_array_equal(row[:HIDDEN], row[HIDDEN:2 * HIDDEN])
    np.testing.assert_array_equal(row[2 * HIDDEN:], lex[0, 0])


def test_palindrome_with_shared_params_is_symmetric(rng):
    params = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, rng)
    xs, lex = random_inputs(rng, 1, 3)
    xs = [xs[0], xs[1], xs[0]]
    lex[:, 2] = lex[:, 0]

    H = bilstm_encode(xs, lex, np.ones((1, 3), dtype=bool), params, params).H_out.data[0]
    np.testing.assert_allclose(H[:, :HIDDEN], H[::-1, HIDDEN:2 * HIDDEN], atol=1e-15)


def test_backward_direction_is_forward_on_reversed_input(rng):
    params = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, rng)
    xs, lex = random_inputs(rng, 2, 6)
    mask = np.ones((2, 6), dtype=bool)

    backward = run_lstm(params, xs, lex, mask, reverse=True)
    forward_on_reversed = run_lstm(params, xs[::-1], lex[:, ::-1], mask, reverse=False)

    for t in range(6):
        np.testing.assert_allclose(backward[t].data, forward_on_reversed[5 - t].data, atol=1e-15)


def test_padding_does_not_change_real_rows():
    rng = np.random.default_rng(11)
    fwd = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, rng)
    bwd = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, rng)

    for _ in range(20):
        n = int(rng.integers(1, 21))
        pads = int(rng.integers(1, 4))
        xs, lex = random_inputs(rng, 1, n + pads)
        mask = np.zeros((1, n + pads), dtype=bool)
        mask[0, :n] = True

        padded = bilstm_encode(xs, lex, mask, fwd, bwd).H_out.data[0]
        plain = bilstm_encode(xs[:n], lex[:, :n], mask[:, :n], fwd, bwd).H_out.data[0]

        assert np.abs(padded[:n] - plain).max() <= 1e-12
        assert (padded[n:] == 0.0).all()
        assert np.abs(padded[:, :2 * HIDDEN]).max() < 1.0


def test_encode_width_and_empty_sequence(rng):
    fwd = LSTMParams.init(WORD_DIM, LEX_DIM, HIDDEN, rng)
    xs, lex = random_inputs(rng, 2, 3)
    mask = np.array([[True, True, False], [True, False, False]])

    assert bilstm_encode(xs, lex, mask, fwd).width == HIDDEN + LEX_DIM

    with pytest.raises(EmptySupportError):
        bilstm_encode(xs, lex, np.array([[True, False, False], [False, False, False]]), fwd)


@pytest.mark.parametrize('candidate', ['tanh', 'sigmoid'])
def test_lstm_params_pass_grad_check(candidate):
    rng = np.random.default_rng(2)
    fwd = LSTMParams.init(WORD_DIM, LEX_DIM, 3, rng, prefix='fwd.')
    bwd = LSTMParams.init(WORD_DIM, LEX_DIM, 3, rng, prefix='bwd.')
    xs, lex = random_inputs(rng, 2, 4)
    mask = np.array([[True, True, True, False], [True, True, False, False]])

    def loss():
        return T.reduce_sum(bilstm_encode(xs, lex, mask, fwd, bwd, candidate).H_out)

    report = T.grad_check(loss, {**fwd.named('fwd.'), **bwd.named('bwd.')})
    assert report.passed, report.failures()
