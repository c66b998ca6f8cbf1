import numpy as np
import pytest

import tensor_utils as T
from attention_utils import (AttentionParams, IANPlus, ModelConfig, PlainClassifier, SemiIAN, attend, build_model,
                             score)
from encoder_utils import EncodedSequence
from errors import ConfigError, DimensionError

HIDDEN = 4
ROWS = [('do you like tea', 'yes', 1), ('do you like coffee or tea', 'maybe a little it depends', 2)]


def randomized(model, seed=0):
    # a fresh head is all zeros, which hides any difference between inputs
    rng = np.random.default_rng(seed)
    model.head_W.data = rng.normal(size=model.head_W.shape)
    model.head_b.data = rng.normal(size=model.head_b.shape)
    return model


def new_model(config, vocab, seed=0):
    return randomized(build_model(config, len(vocab), np.random.default_rng(seed)), seed)


def test_score_examples():
    zero = AttentionParams(W=T.constant(np.zeros((2, 2))), b=T.constant([0.0]))
    identity = AttentionParams(W=T.constant(np.eye(2)), b=T.constant([0.0]))
    h = T.constant([[1.0, 0.0]])
    pool = T.constant([1.0, 0.0])

    assert score(T.constant([[3.0, -2.0]]), T.constant([5.0, 1.0]), zero).data[0] == 0.0
    assert score(h, pool, identity).data[0] == pytest.approx(np.tanh(1.0))
    assert score(h, pool, identity).data[0] == pytest.approx(0.76159, abs=1e-5)

    big = score(T.constant([[100.0, 100.0]]), T.constant([100.0, 100.0]), identity).data[0]
    assert -1.0 <= big <= 1.0

    with pytest.raises(DimensionError):
        score(T.constant([[1.0, 0.0, 0.0]]), pool, identity)


def test_attend_with_zero_params_is_the_masked_mean():
    params = AttentionParams(W=T.constant(np.zeros((3, 2))), b=T.constant([0.0]))
    H = T.constant(np.arange(12.0).reshape(1, 4, 3))
    mask = np.array([[True, True, True, False]])

    alpha, context = attend(EncodedSequence(H_out=H, mask=mask), T.constant(np.ones((1, 2))), params)

    np.testing.assert_allclose(alpha.data, [[1 / 3, 1 / 3, 1 / 3, 0.0]])
    np.testing.assert_allclose(context.data, T.masked_mean(H, mask).data)


def test_attend_single_token():
    params = AttentionParams.init(3, 2, np.random.default_rng(0))
    H = T.constant(np.random.default_rng(1).normal(size=(1, 2, 3)))
    mask = np.array([[True, False]])

    alpha, context = attend(EncodedSequence(H_out=H, mask=mask), T.constant(np.ones((1, 2))), params)

    np.testing.assert_array_equal(alpha.data, [[1.0, 0.0]])
    np.testing.assert_array_equal(context.data, H.data[:, 0])


def test_attention_weights_random_cases():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        batch, n, width, pool_width = rng.integers(1, 4), rng.integers(1, 7), 3, 2
        H = rng.normal(size=(batch, n, width))
        mask = rng.random((batch, n)) < 0.7
        mask[:, 0] = True
        params = AttentionParams(W=T.constant(rng.normal(size=(width, pool_width))), b=T.constant(rng.normal(size=1)))

        alpha, context = attend(EncodedSequence(H_out=T.constant(H), mask=mask),
                                T.constant(rng.normal(size=(batch, pool_width))), params)
        alpha, context = alpha.data, context.data

        assert (alpha >= 0).all()
        assert (alpha[~mask] == 0.0).all()
        np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-12)

        explicit = np.zeros((batch, width))
        for b in range(batch):
            for t in range(n):
                explicit[b] += alpha[b, t] * H[b, t]
        np.testing.assert_allclose(context, explicit, atol=1e-12)


@pytest.mark.parametrize('variant, task, expected_class', [
    ('semi-ian', 'tf', SemiIAN),
    ('ian-plus', 'mc', IANPlus),
    ('lstm-a', 'tf', PlainClassifier),
    ('bilstm-aq', 'mc', PlainClassifier),
])
def test_build_model(vocab, small_config, variant, task, expected_class):
    model = build_model(small_config(variant, task), len(vocab), np.random.default_rng(0))
    assert type(model) is expected_class
    assert model.embedding.shape == (len(vocab), 5)


def test_build_model_rejects_baselines(vocab, small_config):
    with pytest.raises(ConfigError):
        build_model(small_config('bow-lr'), len(vocab), np.random.default_rng(0))


def test_feature_widths(vocab, small_config):
    semi = build_model(small_config('semi-ian', 'tf', k=2), len(vocab), np.random.default_rng(0))
    assert semi.feature_width == 2 * HIDDEN + 12
    assert semi.head_W.shape == (2 * HIDDEN + 12, 3)

    ian = build_model(small_config('ian-plus', 'mc', k=2), len(vocab), np.random.default_rng(0))
    # question branch: option block; answer branch: lexical blocks and the option match block
    assert ian.question_width == 2 * HIDDEN + 2
    assert ian.answer_width == 2 * HIDDEN + 14
    assert ian.feature_width == ian.question_width + ian.answer_width

    bare = build_model(small_config('ian-plus', 'mc', use_extra_embedding=False), len(vocab),
                       np.random.default_rng(0))
    assert bare.feature_width == 4 * HIDDEN

    lstm = build_model(small_config('lstm-a', 'tf'), len(vocab), np.random.default_rng(0))
    assert lstm.head_W.shape == (HIDDEN + 6, 3)


@pytest.mark.parametrize('variant', ['semi-ian', 'ian-plus', 'lstm-a', 'lstm-aq', 'bilstm-a', 'bilstm-aq'])
def test_forward_gives_distributions(vocab, small_config, make_batch, variant):
    config = small_config(variant)
    model = new_model(config, vocab)
    probs = model.predict_proba(make_batch(config, ROWS))

    assert probs.shape == (2, 3)
    assert (probs >= 0).all()
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(probs, model.predict_proba(make_batch(config, ROWS)))


def test_untrained_model_predicts_uniform(vocab, small_config, make_batch):
    config = small_config('ian-plus')
    model = build_model(config, len(vocab), np.random.default_rng(0))
    np.testing.assert_allclose(model.predict_proba(make_batch(config, ROWS)), 1 / 3)


@pytest.mark.parametrize('variant, task', [('semi-ian', 'tf'), ('ian-plus', 'tf'), ('ian-plus', 'mc'),
                                           ('bilstm-aq', 'mc')])
def test_padding_in_a_batch_does_not_change_outputs(vocab, small_config, make_batch, variant, task):
    config = small_config(variant, task)
    model = new_model(config, vocab, seed=3)
    span = (2, 4) if task == 'mc' else None

    rng = np.random.default_rng(5)
    words = [w for w in vocab.tokens[2:]]
    for _ in range(100):
        rows = []
        for _ in range(2):
            question = ' '.join(rng.choice(words, size=rng.integers(4, 7)))
            answer = ' '.join(rng.choice(words, size=rng.integers(1, 6)))
            rows.append((question, answer, 0))

        together = model.predict_proba(make_batch(config, rows, span))
        for i, row in enumerate(rows):
            alone = model.predict_proba(make_batch(config, [row], span))
            assert np.abs(together[i] - alone[0]).max() < 1e-8


def test_attention_weights_are_trimmed_to_masks(vocab, small_config, make_batch):
    config = small_config('ian-plus')
    weights = new_model(config, vocab).attention_weights(make_batch(config, ROWS))

    assert set(weights) == {'answer', 'question'}
    assert weights['answer'].shape == (2, 5)
    assert (weights['answer'][0, 1:] == 0.0).all()
    np.testing.assert_allclose(weights['question'].sum(axis=1), 1.0)


def test_semi_ian_question_enters_only_through_its_pool(vocab, small_config, make_batch):
    config = small_config('semi-ian')
    model = new_model(config, vocab)
    batch = make_batch(config, ROWS)

    question = model.encode_question(batch)
    pool = T.constant(T.masked_mean(question.H_out, question.mask).data)
    probs, _ = model.forward_from_pool(model.encode_answer(batch), pool)

    assert np.abs(probs.data - model.predict_proba(batch)).max() <= 1e-12


def test_lstm_a_ignores_the_question(vocab, small_config, make_batch):
    config = small_config('lstm-a')
    model = new_model(config, vocab)

    first = model.predict_proba(make_batch(config, [('do you like tea', 'yes', 1)]))
    second = model.predict_proba(make_batch(config, [('is it coffee or tea', 'yes', 1)]))
    np.testing.assert_array_equal(first, second)


def test_bilstm_aq_reads_the_concatenated_sequence(vocab, small_config, make_batch):
    concatenated = small_config('bilstm-aq')
    answer_only = small_config('bilstm-a')

    model = new_model(concatenated, vocab)
    reference = build_model(answer_only, len(vocab), np.random.default_rng(9))
    reference.load_state(model.state())

    joined = model.predict_proba(make_batch(concatenated, [('do you like tea', 'yes', 1)]))
    flat = reference.predict_proba(make_batch(answer_only, [('or', 'do you like tea yes', 1)]))
    assert np.abs(joined - flat).max() <= 1e-12


def test_load_state_rejects_other_architectures(vocab, small_config):
    semi = build_model(small_config('semi-ian'), len(vocab), np.random.default_rng(0))
    ian = build_model(small_config('ian-plus'), len(vocab), np.random.default_rng(0))

    with pytest.raises(ConfigError, match='attention.question'):
        semi.load_state(ian.state())

    wider = build_model(small_config('semi-ian', hidden_size=5), len(vocab), np.random.default_rng(0))
    with pytest.raises(ConfigError):
        semi.load_state(wider.state())


def test_model_config_validation_and_round_trip():
    config = ModelConfig(variant='ian-plus', task='mc', k=4, rho_lex=0.3, rho_opt=0.7)
    assert ModelConfig.from_dict(config.to_dict()) == config

    with pytest.raises(ConfigError):
        ModelConfig(variant='cnn')
    with pytest.raises(ConfigError):
        ModelConfig(k=3, rho_lex=0.0)
    with pytest.raises(ConfigError):
        ModelConfig(num_classes=4)
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({'variant': 'semi-ian', 'layers': 2})


def test_model_config_input_features():
    assert ModelConfig(variant='semi-ian', task='mc').question_feature_parts == ('opt',)
    assert ModelConfig(variant='bilstm-aq', task='mc').question_feature_parts == ('lex', 'opt')
    assert ModelConfig(variant='bilstm-aq', task='mc').answer_feature_parts == ('lex', 'match')
    assert ModelConfig(variant='bilstm-aq', task='mc', option_match=False).answer_feature_parts == ('lex', 'blank')
    assert ModelConfig(variant='semi-ian', task='mc').answer_feature_parts == ('lex', 'match')
    assert ModelConfig(variant='semi-ian', task='mc', option_match=False).answer_feature_parts == ('lex',)
    assert ModelConfig(variant='semi-ian', task='tf').answer_feature_parts == ('lex',)
    assert ModelConfig(variant='bilstm-a', task='mc').question_feature_parts == ()
    assert ModelConfig(variant='bilstm-a', task='mc').answer_feature_parts == ('lex',)
    assert ModelConfig(variant='bow-lr', input_mode='aq').uses_question
    assert not ModelConfig(variant='rule', input_mode='aq').uses_question
