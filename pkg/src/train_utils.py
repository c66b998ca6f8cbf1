import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

import tensor_utils as T
from attention_utils import ModelConfig, build_model
from baseline_utils import RuleClassifier, RuleTable, bow_from_state, bow_lr_train, bow_svm_train, default_rule_table
from batch_utils import BatchEncoder, Subtask, make_batches, pad_batch, subtasks_from_tf
from errors import (CompatibilityError, ConfigError, ParseError, RqaError, TrainingError, UnsupportedVersionError,
                    ValidationError)
from log_utils import progress_disabled
from mc_utils import aggregate, transform
from text_utils import (LABEL_NAMES, Lexicon, MCExample, TFExample, Vocabulary, build_vocab, default_lexicon,
                        load_embeddings)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

K_GRID = (1, 2, 4, 8, 16)
RHO_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))

OPTIMIZERS = ('sgd', 'adam')

_DISPLAY_NAMES = {
    'semi-ian': 'Semi-IAN',
    'ian-plus': 'IAN+',
    'lstm-a': 'LSTM',
    'lstm-aq': 'LSTM',
    'bilstm-a': 'Bi-LSTM',
    'bilstm-aq': 'Bi-LSTM',
    'bow-lr': 'BOW+LR',
    'bow-svm': 'BOW+SVM',
    'rule': 'Rule-based',
}


def setting_of(config):
    return 'A+Q' if config.uses_question else 'A'


def display_name(config, with_setting=False):
    name = _DISPLAY_NAMES[config.variant]
    if with_setting and config.variant not in ('semi-ian', 'ian-plus'):
        return f'{name}({setting_of(config)})'
    return name


@dataclass
class TrainConfig():
    """
        Optimization, model selection and grid settings. Neural models use `lr`; the BOW baselines
        use `baseline_lr` and `baseline_epochs`.
    """
    lr: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    optimizer: str = 'adam'
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 5
    holdout_fraction: float = 0.1
    min_count: int = 2
    freeze_embeddings: bool = False
    baseline_epochs: int = 100
    baseline_lr: float = 0.5
    grid_k: tuple = K_GRID
    grid_rho: tuple = RHO_GRID
    grid_subsample: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        self.grid_k = tuple(int(k) for k in self.grid_k)
        self.grid_rho = tuple(float(rho) for rho in self.grid_rho)

        if not self.lr > 0 or not self.baseline_lr > 0:
            raise ConfigError('Learning rates must be > 0')
        if self.batch_size < 1:
            raise ConfigError(f'batch_size must be >= 1, got {self.batch_size}')
        if self.epochs < 1 or self.baseline_epochs < 1:
            raise ConfigError('epochs must be >= 1')
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f'optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}')
        if self.patience < 1:
            raise ConfigError(f'patience must be >= 1, got {self.patience}')
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError(f'holdout_fraction must be in [0, 1), got {self.holdout_fraction}')
        if not self.grid_k or not set(self.grid_k) <= set(K_GRID):
            raise ConfigError(f'grid_k must be a non-empty subset of {K_GRID}')
        if not self.grid_rho or not set(self.grid_rho) <= set(RHO_GRID):
            raise ConfigError(f'grid_rho must be a non-empty subset of {RHO_GRID}')
        if self.grid_subsample is not None and self.grid_subsample < 1:
            raise ConfigError('grid_subsample must be >= 1')
        if self.jobs < 1:
            raise ConfigError('jobs must be >= 1')

    def to_dict(self):
        data = asdict(self)
        data['grid_k'] = list(self.grid_k)
        data['grid_rho'] = list(self.grid_rho)
        return data

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f'Unknown train config keys: {sorted(unknown)}')
        return cls(**data)


# Optimizers

class SGD():
    def __init__(self, params, lr):
        self.params = params
        self.lr = lr

    def step(self):
        for tensor in self.params.values():
            if tensor.grad is not None:
                tensor.data -= self.lr * tensor.grad


class Adam():
    """
        Adam with bias correction. A parameter without gradient is treated as having a zero gradient.
    """

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(tensor.data) for name, tensor in params.items()}
        self.v = {name: np.zeros_like(tensor.data) for name, tensor in params.items()}

    def step(self):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t

        for name, tensor in self.params.items():
            grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad

            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            tensor.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(params, config):
    if config.optimizer == 'sgd':
        return SGD(params, config.lr)
    return Adam(params, config.lr, config.beta1, config.beta2, config.eps)


# Data preparation

def as_subtasks(examples):
    """
        Flatten T/F examples and multiple-choice examples (one subtask per option) into subtasks.
    """
    subtasks = []
    for example in examples:
        if isinstance(example, Subtask):
            subtasks.append(example)
        elif isinstance(example, MCExample):
            subtasks.extend(transform(example))
        elif isinstance(example, TFExample):
            subtasks.extend(subtasks_from_tf([example]))
        else:
            raise ValidationError(f'Cannot train or evaluate on {type(example).__name__} objects')
    return subtasks


def task_of(examples):
    for example in examples:
        if isinstance(example, MCExample) or (isinstance(example, Subtask) and example.option_index is not None):
            return 'mc'
    return 'tf'


def split_holdout(subtasks, fraction, seed):
    """
        Seeded split into training and held-out subtasks. Options of one question stay together.

        Returns:
            tuple[list[Subtask], list[Subtask]]: (train, holdout). The holdout is empty when
            `fraction` is 0 or there are fewer than two source examples.
    """
    sources = list(dict.fromkeys(s.source_id for s in subtasks))
    if fraction <= 0.0 or len(sources) < 2:
        return list(subtasks), []

    count = min(len(sources) - 1, max(1, int(round(fraction * len(sources)))))
    order = np.random.default_rng([seed, 1]).permutation(len(sources))
    held = {sources[i] for i in order[:count]}

    return ([s for s in subtasks if s.source_id not in held],
            [s for s in subtasks if s.source_id in held])


def training_vocab(subtasks, min_count):
    # one count per source example, so MC questions are not counted once per option
    firsts = {}
    for subtask in subtasks:
        firsts.setdefault(subtask.source_id, subtask)
    return build_vocab([list(s.question) + list(s.answer) for s in firsts.values()], min_count=min_count)


# Prediction

class Predictor():
    """
        Uniform prediction interface over neural models and baselines.
    """

    def __init__(self, config, vocab, lexicon, model=None, baseline=None, batch_size=64):
        if (model is None) == (baseline is None):
            raise ConfigError('A predictor wraps exactly one model or baseline')
        self.config = config
        self.vocab = vocab
        self.lexicon = lexicon
        self.model = model
        self.baseline = baseline
        self.batch_size = batch_size
        self.encoder = BatchEncoder(vocab, lexicon, config) if model is not None else None

    def predict_proba(self, subtasks):
        if not subtasks:
            return np.zeros((0, 3))

        if self.model is not None:
            encoded = self.encoder.encode_all(subtasks)
            batches = make_batches(encoded, self.batch_size, 0, self.config, shuffle=False)
            return np.concatenate([self.model.predict_proba(batch) for batch in batches])

        if hasattr(self.baseline, 'predict_proba'):
            return self.baseline.predict_proba(subtasks)
        return np.eye(3)[self.baseline.predict(subtasks)]

    def predict(self, subtasks):
        if not subtasks:
            return np.zeros(0, dtype=np.int64)
        if self.model is None:
            return np.asarray(self.baseline.predict(subtasks), dtype=np.int64)
        return self.predict_proba(subtasks).argmax(axis=1)

    def __call__(self, subtask):
        return int(self.predict([subtask])[0])

    def attention(self, subtask):
        """
            Attention weights over the real tokens of each attended branch, empty for models
            without attention.
        """
        if self.model is None:
            return {}

        batch = pad_batch([self.encoder.encode(subtask)], self.config)
        weights = self.model.attention_weights(batch)
        lengths = {'answer': len(subtask.answer), 'question': len(subtask.question)}
        return {name: alpha[0, :lengths[name]] for name, alpha in weights.items()}


# Metrics

@dataclass
class Metrics():
    """
        Accuracy, per-class precision / recall and the confusion matrix (rows: gold, columns:
        predicted). For multiple choice they are per-option figures and `exact_match` is the rate of
        questions whose aggregated label is right.
    """
    accuracy: float
    precision: tuple
    recall: tuple
    confusion: tuple
    count: int
    exact_match: Optional[float] = None
    question_count: Optional[int] = None


def compute_metrics(gold, predicted, num_classes=3):
    gold = np.asarray(gold, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if gold.shape != predicted.shape:
        raise ValidationError(f'{gold.size} gold labels for {predicted.size} predictions')
    if not gold.size:
        raise ValidationError('Nothing to evaluate')

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (gold, predicted), 1)

    predicted_totals = confusion.sum(axis=0)
    gold_totals = confusion.sum(axis=1)
    diagonal = np.diag(confusion)

    return Metrics(
        accuracy=float(diagonal.sum() / confusion.sum()),
        precision=tuple(float(diagonal[c] / predicted_totals[c]) if predicted_totals[c] else 0.0
                        for c in range(num_classes)),
        recall=tuple(float(diagonal[c] / gold_totals[c]) if gold_totals[c] else 0.0 for c in range(num_classes)),
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
        count=int(gold.size),
    )


def _exact_match(subtasks, predicted):
    by_question = {}
    for subtask, label in zip(subtasks, predicted):
        by_question.setdefault(subtask.source_id, []).append((subtask.option_index, subtask.label, int(label)))

    hits = 0
    for rows in by_question.values():
        rows.sort()
        hits += aggregate([gold for _, gold, _ in rows]) == aggregate([pred for _, _, pred in rows])

    return hits / len(by_question), len(by_question)


def evaluate(checkpoint, examples):
    """
        Score a trained model on a dataset.

        Args:
            checkpoint (Checkpoint | Predictor): The model.
            examples (list): T/F examples, multiple-choice examples or subtasks.

        Returns:
            Metrics: Accuracy and confusion matrix; for multiple choice also the exact-match rate.

        Raises:
            CompatibilityError: The model was trained for the other task, or its vocabulary does not
                fit its parameters.
    """
    predictor = checkpoint if isinstance(checkpoint, Predictor) else restore_predictor(checkpoint)

    task = task_of(examples)
    if task != predictor.config.task:
        raise CompatibilityError(f'The model was trained on {predictor.config.task.upper()} data, '
                                 f'the dataset is {task.upper()}')

    subtasks = as_subtasks(examples)
    predicted = predictor.predict(subtasks)
    metrics = compute_metrics([s.label for s in subtasks], predicted)

    if task == 'mc':
        exact_match, question_count = _exact_match(subtasks, predicted)
        metrics = replace(metrics, exact_match=exact_match, question_count=question_count)

    return metrics


def _selection_accuracy(predictor, subtasks):
    return compute_metrics([s.label for s in subtasks], predictor.predict(subtasks)).accuracy


# Checkpoints

@dataclass
class Checkpoint():
    config: ModelConfig
    vocab: Vocabulary
    lexicon: Lexicon
    params: dict
    meta: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def _rho_hot_dict(config):
    return {'k': config.k, 'rho_lex': config.rho_lex, 'rho_opt': config.rho_opt}


def save_checkpoint(checkpoint, path):
    """
        Write a checkpoint as versioned JSON. Floats are written with their shortest exact repr,
        so loading gives back the very same arrays.
    """
    payload = {
        'format_version': checkpoint.format_version,
        'config': checkpoint.config.to_dict(),
        'rho_hot': _rho_hot_dict(checkpoint.config),
        'vocab': {'tokens': list(checkpoint.vocab.tokens), 'min_count': checkpoint.vocab.min_count},
        'lexicon': checkpoint.lexicon.to_dict(),
        'params': {name: {'shape': list(array.shape), 'data': np.asarray(array, dtype=np.float64).reshape(-1).tolist()}
                   for name, array in checkpoint.params.items()},
        'meta': checkpoint.meta,
    }

    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)

    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        json.dump(payload, file, ensure_ascii=False)

    logger.info('Saved %s checkpoint to %s', checkpoint.config.variant, path)


_CHECKPOINT_KEYS = ('config', 'vocab', 'lexicon', 'params', 'meta')


def load_checkpoint(path):
    """
        Read a checkpoint written by `save_checkpoint`.

        Raises:
            ParseError: The file is truncated or malformed.
            UnsupportedVersionError: The file has another format version.
    """
    with open(path, 'r', encoding='utf-8') as file:
        text = file.read()

    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=path, line=e.lineno) from e

    if not isinstance(payload, dict) or 'format_version' not in payload:
        raise ParseError('not a checkpoint file', path=path)
    if payload['format_version'] != FORMAT_VERSION:
        raise UnsupportedVersionError(f'{path}: checkpoint format version {payload["format_version"]} '
                                      f'is not supported (expected {FORMAT_VERSION})')

    missing = [key for key in _CHECKPOINT_KEYS if key not in payload]
    if missing:
        raise ParseError(f'missing sections {missing}', path=path)

    try:
        config = ModelConfig.from_dict(payload['config'])
        if 'rho_hot' in payload and payload['rho_hot'] != _rho_hot_dict(config):
            raise ParseError('rho-hot settings disagree with the model config', path=path)

        vocab = Vocabulary(tokens=list(payload['vocab']['tokens']), min_count=payload['vocab']['min_count'])
        lexicon = Lexicon.from_dict(payload['lexicon'])

        params = {}
        for name, entry in payload['params'].items():
            shape = tuple(entry['shape'])
            data = np.array(entry['data'], dtype=np.float64)
            if data.size != int(np.prod(shape)):
                raise ParseError(f'parameter {name} holds {data.size} values for shape {shape}', path=path)
            params[name] = data.reshape(shape)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f'malformed checkpoint ({e})', path=path) from e

    return Checkpoint(config=config, vocab=vocab, lexicon=lexicon, params=params, meta=payload['meta'],
                      format_version=payload['format_version'])


def restore_predictor(checkpoint):
    """
        Rebuild the model or baseline stored in a checkpoint.
    """
    config, vocab = checkpoint.config, checkpoint.vocab

    if config.is_neural:
        embedding = checkpoint.params.get('embedding')
        if embedding is None or embedding.shape[0] != len(vocab):
            raise CompatibilityError(f'The checkpoint vocabulary ({len(vocab)} tokens) does not match its '
                                     f'embedding table')
        model = build_model(config, len(vocab), np.random.default_rng(0))
        try:
            model.load_state(checkpoint.params)
        except ConfigError as e:
            raise CompatibilityError(str(e)) from e
        return Predictor(config, vocab, checkpoint.lexicon, model=model)

    if config.variant == 'rule':
        table = checkpoint.meta.get('rule_table')
        return Predictor(config, vocab, checkpoint.lexicon,
                         baseline=RuleClassifier(RuleTable.from_dict(table) if table else default_rule_table()))

    try:
        baseline = bow_from_state(config.variant, vocab, config.input_mode, checkpoint.params)
    except ConfigError as e:
        raise CompatibilityError(str(e)) from e
    return Predictor(config, vocab, checkpoint.lexicon, baseline=baseline)


# Training

def _train_baseline(model_config, train_part, holdout, train_config, vocab, lexicon, rule_table):
    meta = {}
    params = {}

    if model_config.variant == 'rule':
        table = rule_table or default_rule_table()
        baseline = RuleClassifier(table)
        meta['rule_table'] = table.to_dict()
    else:
        trainer = bow_lr_train if model_config.variant == 'bow-lr' else bow_svm_train
        baseline = trainer(train_part, mode=model_config.input_mode, epochs=train_config.baseline_epochs,
                           lr=train_config.baseline_lr, seed=train_config.seed, vocab=vocab,
                           batch_size=train_config.batch_size)
        params = baseline.state()

    predictor = Predictor(model_config, vocab, lexicon, baseline=baseline)
    selection = holdout or train_part
    meta.update({
        'seed': train_config.seed,
        'epochs_run': 0 if model_config.variant == 'rule' else train_config.baseline_epochs,
        'selection_split': 'holdout' if holdout else 'train',
        'selection_accuracy': _selection_accuracy(predictor, selection),
    })
    return params, meta


def train(model_config, examples, train_config=None, lexicon=None, embeddings_path=None, rule_table=None,
          vocab=None):
    """
        Train a model and return its best checkpoint.

        Neural models minimize the mean cross-entropy with mini-batches. After every epoch the
        accuracy on a seeded held-out part of the training data (the training data itself when
        `holdout_fraction` is 0) decides whether the parameters are the best so far; training stops
        after `patience` epochs without improvement.

        Args:
            model_config (ModelConfig): The model.
            examples (list): T/F examples, multiple-choice examples, or already transformed subtasks.
            train_config (TrainConfig, optional): Optimization settings.
            lexicon (Lexicon, optional): Keyword dictionary. Defaults to the starter lexicon.
            embeddings_path (str, optional): Pretrained word vectors in text format.
            rule_table (RuleTable, optional): Rules of the rule baseline.
            vocab (Vocabulary, optional): Fixed vocabulary. Built from the training part when omitted.

        Returns:
            Checkpoint: The best parameters with vocabulary, lexicon and training metadata.

        Raises:
            ValidationError: The dataset is empty.
            CompatibilityError: The dataset is for the other task.
            TrainingError: The loss became NaN or infinite.
    """
    train_config = train_config or TrainConfig()
    lexicon = lexicon or default_lexicon()

    subtasks = as_subtasks(examples)
    if not subtasks:
        raise ValidationError('Cannot train on an empty dataset')

    task = task_of(subtasks)
    if task != model_config.task:
        raise CompatibilityError(f'The model is configured for {model_config.task.upper()} but the dataset is '
                                 f'{task.upper()}')

    train_part, holdout = split_holdout(subtasks, train_config.holdout_fraction, train_config.seed)
    vocab = vocab or training_vocab(train_part, train_config.min_count)
    logger.info('Training %s on %d subtasks (%d held out), vocabulary of %d tokens',
                model_config.variant, len(train_part), len(holdout), len(vocab))

    if not model_config.is_neural:
        params, meta = _train_baseline(model_config, train_part, holdout, train_config, vocab, lexicon, rule_table)
        meta.update({'train_config': train_config.to_dict(), 'train_size': len(train_part),
                     'holdout_size': len(holdout)})
        return Checkpoint(config=model_config, vocab=vocab, lexicon=lexicon, params=params, meta=meta)

    rng = np.random.default_rng(train_config.seed)
    matrix = None
    if embeddings_path:
        matrix = load_embeddings(embeddings_path, vocab, rng, dim=model_config.embedding_dim).matrix(vocab)

    model = build_model(model_config, len(vocab), rng, matrix)
    predictor = Predictor(model_config, vocab, lexicon, model=model)
    encoded = predictor.encoder.encode_all(train_part)
    selection = holdout or train_part

    trainable = {name: tensor for name, tensor in model.params.items()
                 if not (train_config.freeze_embeddings and name == 'embedding')}
    optimizer = make_optimizer(trainable, train_config)
    dropout_rng = np.random.default_rng([train_config.seed, 3])

    best_accuracy, best_state, best_epoch = -1.0, model.state(), 0
    stale = 0
    history = []
    first_batch_loss = None
    epochs_run = 0

    epochs = tqdm(range(1, train_config.epochs + 1), desc=f'Training {model_config.variant}', leave=False,
                  disable=progress_disabled(logger))
    for epoch in epochs:
        total = 0.0
        for batch in make_batches(encoded, train_config.batch_size, train_config.seed, model_config, epoch=epoch):
            with T.Tape():
                probs = model.forward(batch, training=True, rng=dropout_rng)
                loss = T.cross_entropy(probs, batch.labels)

            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError('training loss is not finite', epoch=epoch)
            if first_batch_loss is None:
                first_batch_loss = value

            T.backward(loss)
            optimizer.step()
            for tensor in model.params.values():
                tensor.zero_grad()

            total += value * len(batch)

        epochs_run = epoch
        history.append(total / len(encoded))
        accuracy = _selection_accuracy(predictor, selection)
        logger.debug('epoch %d: loss %.4f, selection accuracy %.4f', epoch, history[-1], accuracy)

        if accuracy > best_accuracy:
            best_accuracy, best_state, best_epoch = accuracy, model.state(), epoch
            stale = 0
        else:
            stale += 1
            if stale >= train_config.patience:
                logger.info('Early stop after epoch %d (best epoch %d)', epoch, best_epoch)
                break

    model.load_state(best_state)

    meta = {
        'seed': train_config.seed,
        'epochs_run': epochs_run,
        'best_epoch': best_epoch,
        'first_batch_loss': first_batch_loss,
        'loss_history': history,
        'selection_split': 'holdout' if holdout else 'train',
        'selection_accuracy': best_accuracy,
        'train_config': train_config.to_dict(),
        'train_size': len(train_part),
        'holdout_size': len(holdout),
    }
    return Checkpoint(config=model_config, vocab=vocab, lexicon=lexicon, params=model.state(), meta=meta)


# Grid search and ablation

@dataclass
class GridReport():
    table: pd.DataFrame
    best: Optional[dict]


def grid_points(model_config, train_config):
    """
        (k, rho_lex, rho_opt) points of the grid. T/F models keep their rho_opt; multiple-choice
        models also search it. A subsample keeps grid order.
    """
    rho_opts = train_config.grid_rho if model_config.task == 'mc' else (model_config.rho_opt,)
    points = [(k, rho_lex, rho_opt)
              for k in train_config.grid_k for rho_lex in train_config.grid_rho for rho_opt in rho_opts]

    if train_config.grid_subsample is not None and train_config.grid_subsample < len(points):
        rng = np.random.default_rng([train_config.seed, 2])
        keep = np.sort(rng.choice(len(points), size=train_config.grid_subsample, replace=False))
        points = [points[i] for i in keep]

    return points


def _run_grid_point(job):
    model_config, train_examples, test_examples, train_config, lexicon, embeddings_path = job
    try:
        checkpoint = train(model_config, train_examples, train_config, lexicon, embeddings_path)
        test_accuracy = evaluate(checkpoint, test_examples).accuracy if test_examples else math.nan
        return checkpoint.meta['selection_accuracy'], test_accuracy, 'ok'
    except RqaError as e:
        logger.warning('Grid point k=%d rho_lex=%s rho_opt=%s failed: %s',
                       model_config.k, model_config.rho_lex, model_config.rho_opt, e)
        return math.nan, math.nan, f'failed: {e}'


def grid_search(model_config, train_examples, train_config=None, test_examples=None, lexicon=None,
                embeddings_path=None):
    """
        Train one model per (k, rho) grid point and pick the best by held-out accuracy.

        Failed points are reported with their error and skipped by the selection. With
        `train_config.jobs > 1` points run in worker processes; every point is seeded the same way
        as in a serial run, so the table does not depend on `jobs`.

        Returns:
            GridReport: The accuracy table (k, rho_lex, rho_opt, heldout_accuracy, test_accuracy,
            status) and its best row.
    """
    train_config = train_config or TrainConfig()
    points = grid_points(model_config, train_config)
    jobs = [(replace(model_config, k=k, rho_lex=rho_lex, rho_opt=rho_opt), train_examples, test_examples,
             train_config, lexicon, embeddings_path) for k, rho_lex, rho_opt in points]

    logger.info('Grid search over %d points with %d worker(s)', len(jobs), train_config.jobs)

    if train_config.jobs > 1:
        with ProcessPoolExecutor(max_workers=train_config.jobs) as executor:
            results = list(tqdm(executor.map(_run_grid_point, jobs), total=len(jobs), desc='Grid',
                                disable=progress_disabled(logger)))
    else:
        results = [_run_grid_point(job) for job in tqdm(jobs, desc='Grid', disable=progress_disabled(logger))]

    table = pd.DataFrame([{'k': k, 'rho_lex': rho_lex, 'rho_opt': rho_opt, 'heldout_accuracy': heldout,
                           'test_accuracy': test, 'status': status}
                          for (k, rho_lex, rho_opt), (heldout, test, status) in zip(points, results)])

    ok = table[table['status'] == 'ok']
    best = None
    if len(ok):
        best = table.loc[ok['heldout_accuracy'].idxmax()].to_dict()
        logger.info('Best point: k=%d rho_lex=%s rho_opt=%s (held-out accuracy %.4f)',
                    best['k'], best['rho_lex'], best['rho_opt'], best['heldout_accuracy'])

    return GridReport(table=table, best=best)


ABLATION_VARIANTS = ('bilstm-aq', 'ian-plus', 'semi-ian')


def ablation(model_configs, train_examples, test_examples, train_config=None, lexicon=None, embeddings_path=None):
    """
        Train each model with (W) and without (O) the lexical and option embeddings under the same
        seed and score both on the same test split.

        Returns:
            pd.DataFrame: Two rows per model: model, setting, extra_width, test_size, accuracy
            (and exact_match for multiple choice).
    """
    train_config = train_config or TrainConfig()
    if not test_examples:
        raise ValidationError('The ablation needs a test split')

    rows = []
    for config in model_configs:
        for setting, use_extra in (('W', True), ('O', False)):
            variant = replace(config, use_extra_embedding=use_extra)
            checkpoint = train(variant, train_examples, train_config, lexicon, embeddings_path)
            metrics = evaluate(checkpoint, test_examples)

            row = {
                'model': display_name(variant, with_setting=True),
                'setting': setting,
                'extra_width': variant.question_feature_width + variant.answer_feature_width,
                'test_size': metrics.count,
                'accuracy': metrics.accuracy,
            }
            if metrics.exact_match is not None:
                row['exact_match'] = metrics.exact_match
            rows.append(row)

    return pd.DataFrame(rows)


# Reports

def metrics_frame(metrics):
    rows = [('accuracy', metrics.accuracy), ('count', metrics.count)]
    if metrics.exact_match is not None:
        rows += [('exact_match', metrics.exact_match), ('question_count', metrics.question_count)]
    for c, name in enumerate(LABEL_NAMES):
        rows += [(f'precision_{name}', metrics.precision[c]), (f'recall_{name}', metrics.recall[c])]
    for g, gold in enumerate(LABEL_NAMES):
        for p, pred in enumerate(LABEL_NAMES):
            rows.append((f'confusion_{gold}_{pred}', metrics.confusion[g][p]))

    return pd.DataFrame(rows, columns=['metric', 'value'])


def write_tsv(frame, path):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    frame.to_csv(path, sep='\t', index=False, float_format='%.6f', lineterminator='\n')
    logger.info('Wrote %s', path)
