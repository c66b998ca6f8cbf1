import json
import logging
from dataclasses import dataclass

import numpy as np
import pydantic
from pydantic import BaseModel, Field

import tensor_utils as T
from errors import ConfigError, ParseError, ValidationError
from text_utils import FALSE, TRUE, UNCERTAIN, build_vocab

logger = logging.getLogger(__name__)

INPUT_MODES = ('a', 'aq')


# Rule baseline

@dataclass(frozen=True)
class Rule():
    keywords: frozenset
    label: int


@dataclass(frozen=True)
class RuleTable():
    """
        Ordered keyword rules: the first rule with a keyword among the answer tokens decides,
        `default_label` applies when none does.
    """
    rules: tuple
    default_label: int = UNCERTAIN

    def to_dict(self):
        return {'rules': [{'keywords': sorted(rule.keywords), 'label': rule.label} for rule in self.rules],
                'default_label': self.default_label}

    @classmethod
    def from_dict(cls, data):
        # a bare array holds the rules alone
        if isinstance(data, list):
            data = {'rules': data}
        try:
            model = _RuleTableModel.model_validate(data)
        except pydantic.ValidationError as e:
            raise ValidationError(f'Invalid rule table: {e.errors()[0]["msg"]}') from e

        rules = tuple(Rule(keywords=frozenset(k.lower() for k in rule.keywords), label=rule.label)
                      for rule in model.rules)
        return cls(rules=rules, default_label=model.default_label)


class _RuleModel(BaseModel):
    keywords: list[str] = Field(min_length=1)
    label: int = Field(ge=0, le=2)


class _RuleTableModel(BaseModel):
    rules: list[_RuleModel]
    default_label: int = Field(default=UNCERTAIN, ge=0, le=2)


# Negation comes first so that "not ok" is False
_DEFAULT_RULES = [
    (['no', 'not', 'never', 'nope', 'neither', 'none', 'nothing', 'except'], FALSE),
    (['yes', 'yeah', 'yep', 'sure', 'ok', 'okay', 'course', 'absolutely', 'definitely', 'certainly', 'either',
      'both', 'all'], TRUE),
]


def default_rule_table():
    return RuleTable(rules=tuple(Rule(keywords=frozenset(words), label=label) for words, label in _DEFAULT_RULES),
                     default_label=UNCERTAIN)


def load_rule_table(path):
    with open(path, 'r', encoding='utf-8') as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, path=path, line=e.lineno) from e
    return RuleTable.from_dict(data)


def rule_classify(tokens, table):
    """
        Label an answer with the first matching keyword rule.

        Args:
            tokens (Sequence[str]): Answer tokens.
            table (RuleTable): The rules.

        Returns:
            int: A label in {0, 1, 2}.
    """
    present = set(tokens)
    for rule in table.rules:
        if rule.keywords & present:
            return rule.label
    return table.default_label


class RuleClassifier():
    """
        Answer-only keyword classifier over subtasks.
    """

    def __init__(self, table=None):
        self.table = table or default_rule_table()

    def predict(self, examples):
        return np.array([rule_classify(ex.answer, self.table) for ex in examples], dtype=np.int64)


# Bag of words

def bow_tokens(example, mode):
    if mode not in INPUT_MODES:
        raise ConfigError(f'input mode must be a or aq, got {mode!r}')
    if mode == 'aq':
        return list(example.question) + list(example.answer)
    return list(example.answer)


def bow_vectorize(tokens, vocab):
    """
        Token counts over the vocabulary; out-of-vocabulary tokens count towards UNK.

        Args:
            tokens (Sequence[str]): The tokens.
            vocab (Vocabulary): The vocabulary.

        Returns:
            np.ndarray: A float vector of length len(vocab).
    """
    counts = np.zeros(len(vocab))
    for token in tokens:
        counts[vocab.lookup(token)] += 1.0
    return counts


class BowClassifier():
    """
        Linear classifier over BOW vectors: scores = x . W + b.
    """
    kind = None

    def __init__(self, vocab, mode, W, b):
        self.vocab = vocab
        self.mode = mode
        self.W = np.asarray(W, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)

    def features(self, examples):
        return np.stack([bow_vectorize(bow_tokens(ex, self.mode), self.vocab) for ex in examples])

    def scores(self, examples):
        return self.features(examples) @ self.W + self.b

    def predict(self, examples):
        return self.scores(examples).argmax(axis=1)

    def state(self):
        return {'bow.W': self.W.copy(), 'bow.b': self.b.copy()}


class SoftmaxRegression(BowClassifier):
    kind = 'bow-lr'

    def predict_proba(self, examples):
        scores = self.scores(examples)
        exps = np.exp(scores - scores.max(axis=1, keepdims=True))
        return exps / exps.sum(axis=1, keepdims=True)


class LinearSVM(BowClassifier):
    kind = 'bow-svm'


_BOW_CLASSES = {cls.kind: cls for cls in (SoftmaxRegression, LinearSVM)}


def bow_from_state(kind, vocab, mode, arrays):
    if kind not in _BOW_CLASSES:
        raise ConfigError(f'{kind} is not a BOW baseline')
    expected = (len(vocab), 3)
    if np.shape(arrays['bow.W']) != expected:
        raise ConfigError(f'bow.W has shape {np.shape(arrays["bow.W"])}, expected {expected}')
    return _BOW_CLASSES[kind](vocab, mode, arrays['bow.W'], arrays['bow.b'])


def _training_arrays(examples, mode, vocab):
    if not examples:
        raise ValidationError('Cannot train a baseline on an empty training set')
    if vocab is None:
        vocab = build_vocab([bow_tokens(ex, mode) for ex in examples], min_count=0)

    X = np.stack([bow_vectorize(bow_tokens(ex, mode), vocab) for ex in examples])
    y = np.array([ex.label for ex in examples], dtype=np.int64)
    return vocab, X, y


def bow_lr_train(examples, mode='a', epochs=100, lr=0.5, seed=0, vocab=None, batch_size=32):
    """
        Train a softmax regression on BOW vectors with mini-batch gradient descent on cross-entropy.

        Args:
            examples (list): T/F examples or option subtasks (anything with question, answer, label).
            mode (str): 'a' for the answer alone, 'aq' for question tokens followed by answer tokens.
            epochs (int): Passes over the data.
            lr (float): Step size.
            seed (int): Shuffle seed.
            vocab (Vocabulary, optional): Feature vocabulary. Built from the examples when omitted.
            batch_size (int): Mini-batch size.

        Returns:
            SoftmaxRegression: The classifier.
    """
    vocab, X, y = _training_arrays(examples, mode, vocab)

    W = T.parameter(np.zeros((len(vocab), 3)), name='bow.W')
    b = T.parameter(np.zeros(3), name='bow.b')
    rng = np.random.default_rng(seed)

    for _ in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch_size):
            rows = order[start:start + batch_size]
            with T.Tape():
                probs = T.softmax(T.add_bias(T.matmul(T.constant(X[rows]), W), b))
                loss = T.cross_entropy(probs, y[rows])
            T.backward(loss)

            for param in (W, b):
                param.data -= lr * param.grad
                param.zero_grad()

    logger.info('Trained softmax regression on %d examples (%d features, mode %s)', len(y), len(vocab), mode)
    return SoftmaxRegression(vocab, mode, W.data, b.data)


def bow_svm_train(examples, mode='a', epochs=100, lr=0.1, seed=0, vocab=None, batch_size=32, reg=1e-4):
    """
        Train a multiclass linear SVM (Crammer-Singer hinge loss) on BOW vectors by subgradient descent.
    """
    vocab, X, y = _training_arrays(examples, mode, vocab)

    W = np.zeros((len(vocab), 3))
    b = np.zeros(3)
    rng = np.random.default_rng(seed)

    for _ in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch_size):
            rows = order[start:start + batch_size]
            Xb, yb = X[rows], y[rows]
            index = np.arange(len(rows))

            margins = Xb @ W + b - (Xb @ W + b)[index, yb][:, None] + 1.0
            margins[index, yb] = 0.0
            worst = margins.argmax(axis=1)
            active = margins[index, worst] > 0.0

            G = np.zeros_like(margins)
            G[index[active], worst[active]] += 1.0
            G[index[active], yb[active]] -= 1.0

            W -= lr * (Xb.T @ G / len(rows) + reg * W)
            b -= lr * G.sum(axis=0) / len(rows)

    logger.info('Trained linear SVM on %d examples (%d features, mode %s)', len(y), len(vocab), mode)
    return LinearSVM(vocab, mode, W, b)
