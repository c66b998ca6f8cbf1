from dataclasses import asdict, dataclass, fields

import numpy as np

import tensor_utils as T
from encoder_utils import CANDIDATE_ACTIVATIONS, LSTMParams, RhoHotConfig, bilstm_encode
from errors import ConfigError, DimensionError, ValidationError
from text_utils import LEXICON_CLASSES, PAD

NEURAL_VARIANTS = ('semi-ian', 'ian-plus', 'lstm-a', 'lstm-aq', 'bilstm-a', 'bilstm-aq')
BASELINE_VARIANTS = ('bow-lr', 'bow-svm', 'rule')
MODEL_VARIANTS = NEURAL_VARIANTS + BASELINE_VARIANTS


@dataclass
class ModelConfig():
    """
        Everything that fixes a model's architecture and input features.

        `use_extra_embedding=False` removes the lexical and option blocks entirely (zero width).
        `option_match` adds an answer block marking the tokens that also occur in the option under
        consideration (multiple choice, models that read the question).
        `input_mode` ('a' or 'aq') only applies to the BOW and rule baselines.
    """
    variant: str = 'semi-ian'
    task: str = 'tf'
    hidden_size: int = 64
    embedding_dim: int = 300
    k: int = 1
    rho_lex: float = 1.0
    rho_opt: float = 1.0
    use_extra_embedding: bool = True
    option_match: bool = True
    candidate_activation: str = 'tanh'
    dropout: float = 0.2
    num_classes: int = 3
    input_mode: str = 'a'

    def __post_init__(self):
        if self.variant not in MODEL_VARIANTS:
            raise ConfigError(f'Unknown model {self.variant!r}, expected one of {list(MODEL_VARIANTS)}')
        if self.task not in ('tf', 'mc'):
            raise ConfigError(f'Unknown task {self.task!r}, expected tf or mc')
        if self.num_classes != 3:
            raise ConfigError('Both T/F answers and per-option subtasks have exactly 3 classes')
        if self.hidden_size < 1 or self.embedding_dim < 1:
            raise ConfigError('hidden_size and embedding_dim must be positive')
        if self.candidate_activation not in CANDIDATE_ACTIVATIONS:
            raise ConfigError(f'candidate_activation must be one of {CANDIDATE_ACTIVATIONS}')
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f'dropout must be in [0, 1), got {self.dropout}')
        if self.input_mode not in ('a', 'aq'):
            raise ConfigError(f'input_mode must be a or aq, got {self.input_mode!r}')
        # validates k and both rho values
        self.lexical_cfg
        self.option_cfg

    @property
    def lexical_cfg(self):
        return RhoHotConfig(k=self.k, rho=self.rho_lex)

    @property
    def option_cfg(self):
        return RhoHotConfig(k=self.k, rho=self.rho_opt)

    @property
    def is_neural(self):
        return self.variant in NEURAL_VARIANTS

    @property
    def bidirectional(self):
        return self.variant not in ('lstm-a', 'lstm-aq')

    @property
    def concatenates(self):
        return self.variant in ('lstm-aq', 'bilstm-aq')

    @property
    def uses_question(self):
        if self.is_neural:
            return self.variant not in ('lstm-a', 'bilstm-a')
        # the keyword rules only read the answer
        return self.variant != 'rule' and self.input_mode == 'aq'

    @property
    def question_feature_parts(self):
        if not self.use_extra_embedding or not self.uses_question:
            return ()
        if self.concatenates:
            return ('lex', 'opt') if self.task == 'mc' else ('lex',)
        # the question branch swaps its lexical embedding for the option embedding on multiple choice
        return ('opt',) if self.task == 'mc' else ('lex',)

    @property
    def answer_feature_parts(self):
        if not self.use_extra_embedding:
            return ()
        if self.task != 'mc' or not self.uses_question:
            return ('lex',)
        if self.option_match:
            return ('lex', 'match')
        # concatenated rows need the width of the question rows
        return ('lex', 'blank') if self.concatenates else ('lex',)

    def feature_part_width(self, part):
        return len(LEXICON_CLASSES) * self.k if part == 'lex' else self.k

    @property
    def question_feature_width(self):
        return sum(self.feature_part_width(part) for part in self.question_feature_parts)

    @property
    def answer_feature_width(self):
        return sum(self.feature_part_width(part) for part in self.answer_feature_parts)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f'Unknown model config keys: {sorted(unknown)}')
        return cls(**data)


@dataclass
class AttentionParams():
    """
        Bilinear score parameters: W bridges the attended rows (width D) and the pooling
        vector (width E); b is a single bias.
    """
    W: T.Tensor
    b: T.Tensor

    @classmethod
    def init(cls, row_width, pool_width, rng, prefix=''):
        bound = 1.0 / np.sqrt(max(pool_width, 1))
        return cls(W=T.parameter(rng.uniform(-bound, bound, size=(row_width, pool_width)), name=f'{prefix}W'),
                   b=T.parameter(np.zeros(1), name=f'{prefix}b'))


def score(h, pool, params):
    """
        Score function tanh(h . W . pool^T + b) for every row of `h`.

        Args:
            h (Tensor): [..., n, D] hidden rows.
            pool (Tensor): [..., E] pooling vector.
            params (AttentionParams): W is [D, E].

        Returns:
            Tensor: [..., n] scores in (-1, 1).
    """
    if h.shape[-1] != params.W.shape[0] or pool.shape[-1] != params.W.shape[1]:
        raise DimensionError(f'score: rows {h.shape} and pool {pool.shape} do not fit W {params.W.shape}')

    return T.tanh(T.add_scalar(T.batch_dot(T.matmul(h, params.W), pool), params.b))


def attend(encoded, pool, params):
    """
        Attention over an encoded sequence steered by a pooling vector.

        Args:
            encoded (EncodedSequence): Rows and mask of the attended branch.
            pool (Tensor): Pooling vector of the other branch.
            params (AttentionParams): Score parameters.

        Returns:
            tuple[Tensor, Tensor]: Weights alpha [..., n] (zero on padding) and the context vector
            sum_t alpha_t * H_t.
    """
    alpha = T.masked_softmax(score(encoded.H_out, pool, params), encoded.mask)
    return alpha, T.weighted_sum(alpha, encoded.H_out)


class AnswerClassifier():
    """
        Shared plumbing of the neural answer classifiers: named parameters, word embeddings,
        encoders and the softmax head over {False, True, Uncertain}.
    """

    def __init__(self, config, vocab_size, rng, embedding_matrix=None):
        self.config = config
        self.params = {}

        if embedding_matrix is None:
            embedding_matrix = rng.uniform(-0.1, 0.1, size=(vocab_size, config.embedding_dim))
            embedding_matrix[PAD] = 0.0
        if embedding_matrix.shape != (vocab_size, config.embedding_dim):
            raise ConfigError(f'Embedding matrix {embedding_matrix.shape} does not match '
                              f'({vocab_size}, {config.embedding_dim})')

        self.embedding = self._register('embedding', T.parameter(embedding_matrix))

    def _register(self, name, tensor):
        tensor.name = name
        self.params[name] = tensor
        return tensor

    def _make_encoder(self, prefix, lex_dim, rng):
        cfg = self.config
        directions = ('fwd', 'bwd') if cfg.bidirectional else ('fwd',)
        encoders = []

        for direction in directions:
            lstm = LSTMParams.init(cfg.embedding_dim, lex_dim, cfg.hidden_size, rng)
            for name, tensor in lstm.named(f'{prefix}.{direction}.').items():
                self._register(name, tensor)
            encoders.append(lstm)

        return encoders[0], (encoders[1] if len(encoders) > 1 else None)

    def _make_attention(self, prefix, row_width, pool_width, rng):
        attention = AttentionParams.init(row_width, pool_width, rng)
        self._register(f'{prefix}.W', attention.W)
        self._register(f'{prefix}.b', attention.b)
        return attention

    def _make_head(self, feature_width):
        # zero head: an untrained model predicts the uniform distribution
        self.head_W = self._register('head.W', T.parameter(np.zeros((feature_width, self.config.num_classes))))
        self.head_b = self._register('head.b', T.parameter(np.zeros(self.config.num_classes)))

    @property
    def encoded_width_unit(self):
        return (2 if self.config.bidirectional else 1) * self.config.hidden_size

    def embed(self, ids):
        return [T.gather(self.embedding, ids[:, t]) for t in range(ids.shape[1])]

    def encode(self, ids, feats, mask, encoder):
        fwd, bwd = encoder
        return bilstm_encode(self.embed(ids), feats, mask, fwd, bwd, candidate=self.config.candidate_activation)

    def head(self, features, training=False, rng=None):
        if training and self.config.dropout > 0.0:
            features = T.dropout(features, self.config.dropout, rng)
        return T.softmax(T.add_bias(T.matmul(features, self.head_W), self.head_b))

    def _check_batch(self, batch):
        if not batch.answer_mask.any(axis=1).all():
            raise ValidationError('Every answer needs at least one token')
        if self.config.uses_question and not batch.question_mask.any(axis=1).all():
            raise ValidationError('Every question needs at least one token')

    def forward(self, batch, training=False, rng=None):
        """
            Class distribution [B, 3] for a padded batch.
        """
        self._check_batch(batch)
        probs, _ = self._forward(batch, training, rng)
        return probs

    def attention_weights(self, batch):
        """
            Attention weights per branch ({'answer': [B, n_a], 'question': [B, n_q]} as available).
        """
        self._check_batch(batch)
        _, weights = self._forward(batch, False, None)
        return {name: alpha.data for name, alpha in weights.items()}

    def predict_proba(self, batch):
        return self.forward(batch).data

    def _forward(self, batch, training, rng):
        raise NotImplementedError

    def state(self):
        return {name: tensor.data.copy() for name, tensor in self.params.items()}

    def load_state(self, arrays):
        missing = set(self.params) - set(arrays)
        unexpected = set(arrays) - set(self.params)
        if missing or unexpected:
            raise ConfigError(f'Parameter names differ: missing {sorted(missing)}, unexpected {sorted(unexpected)}')

        for name, tensor in self.params.items():
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ConfigError(f'{name}: stored shape {value.shape} differs from {tensor.shape}')
            tensor.data = value.copy()


class SemiIAN(AnswerClassifier):
    """
        The question is background only: its mean-pooled encoding steers attention over the answer
        and the answer context alone feeds the head.
    """

    def __init__(self, config, vocab_size, rng, embedding_matrix=None):
        super().__init__(config, vocab_size, rng, embedding_matrix)

        self.question_encoder = self._make_encoder('question', config.question_feature_width, rng)
        self.answer_encoder = self._make_encoder('answer', config.answer_feature_width, rng)

        self.question_width = self.encoded_width_unit + config.question_feature_width
        self.answer_width = self.encoded_width_unit + config.answer_feature_width

        self._build_attention(rng)
        self._make_head(self.feature_width)

    def _build_attention(self, rng):
        self.answer_attention = self._make_attention('attention.answer', self.answer_width, self.question_width, rng)

    @property
    def feature_width(self):
        return self.answer_width

    def encode_question(self, batch):
        return self.encode(batch.question_ids, batch.question_feats, batch.question_mask, self.question_encoder)

    def encode_answer(self, batch):
        return self.encode(batch.answer_ids, batch.answer_feats, batch.answer_mask, self.answer_encoder)

    def forward_from_pool(self, answer, question_pool, training=False, rng=None):
        """
            Finish the forward pass from an encoded answer and the question pooling vector.
        """
        alpha, answer_context = attend(answer, question_pool, self.answer_attention)
        return self.head(answer_context, training, rng), {'answer': alpha}

    def _forward(self, batch, training, rng):
        question = self.encode_question(batch)
        question_pool = T.masked_mean(question.H_out, question.mask)
        return self.forward_from_pool(self.encode_answer(batch), question_pool, training, rng)


class IANPlus(SemiIAN):
    """
        Both branches attend with the other's pooling vector; the head reads [q_r; s_r].
    """

    def _build_attention(self, rng):
        super()._build_attention(rng)
        self.question_attention = self._make_attention('attention.question', self.question_width, self.answer_width,
                                                       rng)

    @property
    def feature_width(self):
        return self.question_width + self.answer_width

    def _forward(self, batch, training, rng):
        question = self.encode_question(batch)
        answer = self.encode_answer(batch)

        question_pool = T.masked_mean(question.H_out, question.mask)
        answer_pool = T.masked_mean(answer.H_out, answer.mask)

        answer_alpha, answer_context = attend(answer, question_pool, self.answer_attention)
        question_alpha, question_context = attend(question, answer_pool, self.question_attention)

        features = T.concat([question_context, answer_context], axis=-1)
        return self.head(features, training, rng), {'answer': answer_alpha, 'question': question_alpha}


class PlainClassifier(AnswerClassifier):
    """
        LSTM / Bi-LSTM over the answer alone (A) or over the token-level concatenation
        question + answer (A+Q), mean-pooled into the head.
    """

    def __init__(self, config, vocab_size, rng, embedding_matrix=None):
        super().__init__(config, vocab_size, rng, embedding_matrix)

        if config.concatenates and config.question_feature_width != config.answer_feature_width:
            raise ConfigError('Concatenated inputs need equal question and answer feature widths')

        self.encoder = self._make_encoder('encoder', config.answer_feature_width, rng)
        self._make_head(self.encoded_width_unit + config.answer_feature_width)

    def _inputs(self, batch):
        if not self.config.concatenates:
            return batch.answer_ids, batch.answer_feats, batch.answer_mask

        # padding between the two parts is masked, so it is skipped by the encoder
        return (np.concatenate([batch.question_ids, batch.answer_ids], axis=1),
                np.concatenate([batch.question_feats, batch.answer_feats], axis=1),
                np.concatenate([batch.question_mask, batch.answer_mask], axis=1))

    def _forward(self, batch, training, rng):
        ids, feats, mask = self._inputs(batch)
        encoded = self.encode(ids, feats, mask, self.encoder)
        return self.head(T.masked_mean(encoded.H_out, encoded.mask), training, rng), {}


_MODEL_CLASSES = {
    'semi-ian': SemiIAN,
    'ian-plus': IANPlus,
    'lstm-a': PlainClassifier,
    'lstm-aq': PlainClassifier,
    'bilstm-a': PlainClassifier,
    'bilstm-aq': PlainClassifier,
}


def build_model(config, vocab_size, rng, embedding_matrix=None):
    """
        Instantiate the neural model of `config.variant`.

        Args:
            config (ModelConfig): The architecture.
            vocab_size (int): Rows of the embedding table.
            rng (np.random.Generator): Initialization generator.
            embedding_matrix (np.ndarray, optional): Pretrained [vocab_size, embedding_dim] vectors.

        Returns:
            AnswerClassifier: The model.
    """
    if not config.is_neural:
        raise ConfigError(f'{config.variant} is not a neural model')
    return _MODEL_CLASSES[config.variant](config, vocab_size, rng, embedding_matrix)
