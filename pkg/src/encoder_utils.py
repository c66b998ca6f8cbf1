from dataclasses import dataclass

import numpy as np

import tensor_utils as T
from errors import ConfigError, EmptySupportError, ValidationError
from text_utils import LEXICON_CLASSES

CANDIDATE_ACTIVATIONS = ('tanh', 'sigmoid')
GATES = ('i', 'f', 'o', 'd')


@dataclass(frozen=True)
class RhoHotConfig():
    """
        Block size `k` and activation value `rho` of a rho-hot encoding.
    """
    k: int = 1
    rho: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f'k must be >= 1, got {self.k}')
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError(f'rho must be in (0, 1], got {self.rho}')


def rho_hot_encode(token, lexicon, cfg):
    """
        Lexical embedding of a token: one k-wide block per lexicon class, filled with rho when the
        token belongs to that class.

        Args:
            token (str): The token.
            lexicon (Lexicon): The six-class keyword dictionary.
            cfg (RhoHotConfig): Block size and value.

        Returns:
            np.ndarray: A vector of length 6 * k.
    """
    vector = np.zeros(len(LEXICON_CLASSES) * cfg.k)
    for j in lexicon.classes_of(token):
        vector[j * cfg.k:(j + 1) * cfg.k] = cfg.rho
    return vector


def option_encode(position, option_span, cfg):
    """
        Option embedding of the token at `position`: rho everywhere when the token lies in the
        half-open span of the option under consideration, zeros otherwise.
    """
    start, end = option_span
    if start <= position < end:
        return np.full(cfg.k, cfg.rho)
    return np.zeros(cfg.k)


def option_match_encode(token, option_tokens, cfg):
    """
        Answer-side option marker: rho everywhere when the answer token also occurs in the option
        under consideration, zeros otherwise.
    """
    if token in option_tokens:
        return np.full(cfg.k, cfg.rho)
    return np.zeros(cfg.k)


@dataclass
class LSTMParams():
    """
        Weights of one LSTM direction. Every gate matrix maps the concatenation
        [c_prev, h_prev, x_t, l_t] (row-vector convention, shape [2H + d_word + d_lex, H]) to H units.
    """
    W_i: T.Tensor
    W_f: T.Tensor
    W_o: T.Tensor
    W_d: T.Tensor
    b_i: T.Tensor
    b_f: T.Tensor
    b_o: T.Tensor
    b_d: T.Tensor

    @property
    def hidden_size(self):
        return self.b_i.shape[0]

    @property
    def input_size(self):
        return self.W_i.shape[0]

    @classmethod
    def init(cls, word_dim, lex_dim, hidden_size, rng, prefix=''):
        """
            Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases except a forget bias of 1.
        """
        width = 2 * hidden_size + word_dim + lex_dim
        bound = 1.0 / np.sqrt(hidden_size)

        weights = {f'W_{g}': T.parameter(rng.uniform(-bound, bound, size=(width, hidden_size)), name=f'{prefix}W_{g}')
                   for g in GATES}
        biases = {f'b_{g}': T.parameter(np.full(hidden_size, 1.0 if g == 'f' else 0.0), name=f'{prefix}b_{g}')
                  for g in GATES}

        return cls(**weights, **biases)

    def named(self, prefix=''):
        return {f'{prefix}{name}': getattr(self, name) for name in
                [f'W_{g}' for g in GATES] + [f'b_{g}' for g in GATES]}


def _gate(params, gate, inputs, activation):
    W = getattr(params, f'W_{gate}')
    b = getattr(params, f'b_{gate}')
    return activation(T.add_bias(T.matmul(inputs, W), b))


def lstm_step(params, c_prev, h_prev, x_t, l_t, candidate='tanh'):
    """
        One step of the modified LSTM.

        The input, forget and candidate units read [c_prev, h_prev, x_t, l_t]; the output gate reads
        the new cell state c_t in place of c_prev. c_t = i * d + f * c_prev, h_t = o * tanh(c_t).

        Args:
            params (LSTMParams): The direction's weights.
            c_prev (Tensor): [B, H] previous cell state.
            h_prev (Tensor): [B, H] previous hidden state.
            x_t (Tensor): [B, d_word] word embeddings.
            l_t (Tensor): [B, d_lex] lexical (or option) embeddings, possibly zero-width.
            candidate (str): 'tanh', or 'sigmoid' for the literal printed form of the candidate unit.

        Returns:
            tuple[Tensor, Tensor]: (c_t, h_t).
    """
    if candidate not in CANDIDATE_ACTIVATIONS:
        raise ConfigError(f'candidate activation must be one of {CANDIDATE_ACTIVATIONS}, got {candidate!r}')

    recurrent_inputs = T.concat([c_prev, h_prev, x_t, l_t], axis=-1)

    i_t = _gate(params, 'i', recurrent_inputs, T.sigmoid)
    f_t = _gate(params, 'f', recurrent_inputs, T.sigmoid)
    d_t = _gate(params, 'd', recurrent_inputs, T.tanh if candidate == 'tanh' else T.sigmoid)

    c_t = T.add(T.mul(i_t, d_t), T.mul(f_t, c_prev))

    o_t = _gate(params, 'o', T.concat([c_t, h_prev, x_t, l_t], axis=-1), T.sigmoid)
    h_t = T.mul(o_t, T.tanh(c_t))

    return c_t, h_t


def run_lstm(params, xs, lex, mask, reverse=False, candidate='tanh'):
    """
        Run one direction over a padded batch.

        At masked positions the state is carried through unchanged, so padding anywhere in a
        sequence has no effect on the real tokens.

        Args:
            params (LSTMParams): The direction's weights.
            xs (list[Tensor]): One [B, d_word] tensor per position.
            lex (np.ndarray): [B, n, d_lex] lexical features.
            mask (np.ndarray): [B, n] booleans, true at real tokens.
            reverse (bool): Feed the sequence right to left.
            candidate (str): Candidate activation.

        Returns:
            list[Tensor]: Hidden state after each position, in original position order.
    """
    batch, length = mask.shape
    hidden = params.hidden_size

    c = T.constant(np.zeros((batch, hidden)))
    h = T.constant(np.zeros((batch, hidden)))
    outputs = [None] * length

    order = range(length - 1, -1, -1) if reverse else range(length)
    for t in order:
        c_new, h_new = lstm_step(params, c, h, xs[t], T.constant(lex[:, t, :]), candidate)
        c = T.select_rows(mask[:, t], c_new, c)
        h = T.select_rows(mask[:, t], h_new, h)
        outputs[t] = h

    return outputs


@dataclass
class EncodedSequence():
    """
        Per-token rows [h_fwd; h_bwd; l_t] (h_bwd absent for a one-directional encoder).
        Rows at padding positions are exactly zero.
    """
    H_out: T.Tensor
    mask: np.ndarray

    @property
    def width(self):
        return self.H_out.shape[-1]


def bilstm_encode(xs, lex, mask, fwd_params, bwd_params=None, candidate='tanh'):
    """
        Encode a padded batch with a (bi-directional) LSTM and append the lexical features.

        Args:
            xs (list[Tensor]): One [B, d_word] embedding tensor per position.
            lex (np.ndarray): [B, n, d_lex] lexical or option features.
            mask (np.ndarray): [B, n] booleans, true at real tokens.
            fwd_params (LSTMParams): Left-to-right weights.
            bwd_params (LSTMParams, optional): Right-to-left weights. None gives a one-directional encoder.
            candidate (str): Candidate activation.

        Returns:
            EncodedSequence: [B, n, 2H + d_lex] rows (H + d_lex without a backward direction).

        Raises:
            EmptySupportError: If a sequence of the batch has no real token.
    """
    mask = np.asarray(mask, dtype=bool)
    lex = np.asarray(lex, dtype=np.float64)

    if mask.ndim != 2 or len(xs) != mask.shape[1] or lex.shape[:2] != mask.shape:
        raise ValidationError(f'bilstm_encode: {len(xs)} embeddings, lexical features {lex.shape} '
                              f'and mask {mask.shape} disagree')
    if not mask.any(axis=1).all():
        raise EmptySupportError('bilstm_encode: a sequence has no real token')

    forward = run_lstm(fwd_params, xs, lex, mask, reverse=False, candidate=candidate)
    backward = run_lstm(bwd_params, xs, lex, mask, reverse=True, candidate=candidate) if bwd_params else None

    rows = []
    for t in range(mask.shape[1]):
        parts = [forward[t]] + ([backward[t]] if backward else []) + [T.constant(lex[:, t, :])]
        row = T.concat(parts, axis=-1)
        rows.append(T.select_rows(mask[:, t], row, T.constant(np.zeros(row.shape))))

    return EncodedSequence(H_out=T.stack(rows, axis=1), mask=mask)
