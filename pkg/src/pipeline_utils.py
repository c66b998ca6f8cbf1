import json
import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

import tensor_utils as T
from attention_utils import ModelConfig, build_model
from baseline_utils import load_rule_table
from batch_utils import BatchEncoder, Subtask, pad_batch
from errors import CompatibilityError, ConfigError, ValidationError
from mc_utils import prediction_record, run_mc_inference
from synth_utils import generate_synthetic
from text_utils import (FALSE, LABEL_NAMES, PAD_TOKEN, UNK_TOKEN, MCExample, Vocabulary, default_lexicon,
                        load_dataset, load_lexicon, resolve_option_spans, sniff_task, tokenize)
from train_utils import (ABLATION_VARIANTS, as_subtasks, ablation, display_name, evaluate, grid_search,
                         load_checkpoint, metrics_frame, restore_predictor, save_checkpoint, setting_of, train,
                         write_tsv)

logger = logging.getLogger(__name__)

GRADCHECK_VARIANTS = ('semi-ian', 'ian-plus')


# Data files

def resolve_data(data):
    """
        Find the train and test files behind a --data argument.

        Args:
            data (str): A folder holding train.jsonl and/or test.jsonl, or a single JSONL file.

        Returns:
            tuple[str | None, str | None]: (train, test) paths. A single file is returned as the train
            path and the test path is None.
    """
    if os.path.isdir(data):
        train_path = os.path.join(data, 'train.jsonl')
        test_path = os.path.join(data, 'test.jsonl')
        train_path = train_path if os.path.isfile(train_path) else None
        test_path = test_path if os.path.isfile(test_path) else None
        if train_path is None and test_path is None:
            raise FileNotFoundError(f'{data} holds neither train.jsonl nor test.jsonl')
        return train_path, test_path

    if not os.path.isfile(data):
        raise FileNotFoundError(f'No such file or folder: {data}')
    return data, None


def evaluation_file(data):
    # a folder is evaluated on its test split
    train_path, test_path = resolve_data(data)
    return test_path or train_path


def check_task(path, task):
    found = sniff_task(path)
    if found is not None and found != task:
        raise ConfigError(f'--task {task} does not match {path}, which holds {found.upper()} rows')


def load_split(path, task):
    check_task(path, task)
    return load_dataset(path, task)


def _load_resources(lexicon_path, rules_path):
    lexicon = load_lexicon(lexicon_path) if lexicon_path else default_lexicon()
    rule_table = load_rule_table(rules_path) if rules_path else None
    return lexicon, rule_table


# Synthetic data

def gensynth_main(task, n_train, n_test, seed, out):
    return generate_synthetic(task, n_train, n_test, seed, out)


# Training

@dataclass
class TrainResult():
    checkpoint_path: str
    metrics_path: str
    metrics: object
    evaluated_on: str


def train_main(data, model_config, train_config, out, lexicon_path=None, embeddings_path=None, rules_path=None):
    """
        Train a model on the train split of `data`, save it and score it.

        Writes `checkpoint.json` and `metrics.tsv` into `out`. The metrics are computed on the test
        split when there is one, on the training data otherwise.
    """
    train_path, test_path = resolve_data(data)
    if train_path is None:
        raise FileNotFoundError(f'{data} has no train.jsonl')

    lexicon, rule_table = _load_resources(lexicon_path, rules_path)
    train_examples = load_split(train_path, model_config.task)
    checkpoint = train(model_config, train_examples, train_config, lexicon=lexicon,
                       embeddings_path=embeddings_path, rule_table=rule_table)

    checkpoint_path = os.path.join(out, 'checkpoint.json')
    save_checkpoint(checkpoint, checkpoint_path)

    if test_path is not None:
        metrics, evaluated_on = evaluate(checkpoint, load_split(test_path, model_config.task)), test_path
    else:
        metrics, evaluated_on = evaluate(checkpoint, train_examples), train_path

    metrics_path = os.path.join(out, 'metrics.tsv')
    write_tsv(metrics_frame(metrics), metrics_path)

    return TrainResult(checkpoint_path=checkpoint_path, metrics_path=metrics_path, metrics=metrics,
                       evaluated_on=evaluated_on)


# Evaluation

def _dataset_name(path):
    folder = os.path.basename(os.path.dirname(os.path.abspath(path)))
    stem = os.path.splitext(os.path.basename(path))[0]
    return f'{folder}/{stem}' if folder else stem


def eval_main(data, checkpoint_paths, out=None):
    """
        Evaluate one or more checkpoints on the same dataset.

        Returns:
            tuple[pd.DataFrame, list]: The accuracy table (model, setting, dataset, accuracy,
            exact_match) and the Metrics of each checkpoint. With `out`, writes `accuracy.tsv` and one
            `metrics_<checkpoint>.tsv` per checkpoint.
    """
    if not checkpoint_paths:
        raise ConfigError('At least one checkpoint is needed')

    path = evaluation_file(data)
    dataset = _dataset_name(path)
    rows, all_metrics = [], []
    cache = {}

    for checkpoint_path in checkpoint_paths:
        checkpoint = load_checkpoint(checkpoint_path)
        task = checkpoint.config.task
        if task not in cache:
            cache[task] = load_split(path, task)

        metrics = evaluate(checkpoint, cache[task])
        all_metrics.append(metrics)
        rows.append({
            'model': display_name(checkpoint.config),
            'setting': setting_of(checkpoint.config),
            'dataset': dataset,
            'accuracy': metrics.accuracy,
            'exact_match': metrics.exact_match if metrics.exact_match is not None else np.nan,
        })

        if out:
            stem = os.path.splitext(os.path.basename(checkpoint_path))[0]
            if stem == 'checkpoint':
                stem = os.path.basename(os.path.dirname(os.path.abspath(checkpoint_path))) or stem
            write_tsv(metrics_frame(metrics), os.path.join(out, f'metrics_{stem}.tsv'))

    table = pd.DataFrame(rows, columns=['model', 'setting', 'dataset', 'accuracy', 'exact_match'])
    if out:
        write_tsv(table, os.path.join(out, 'accuracy.tsv'))

    return table, all_metrics


# Prediction

def predict_main(data, checkpoint_path, out):
    """
        Write one JSON line per example: T/F {id, label, name}, multiple choice
        {id, per_option, final}.

        Returns:
            int: The number of lines written.
    """
    checkpoint = load_checkpoint(checkpoint_path)
    predictor = restore_predictor(checkpoint)
    task = checkpoint.config.task
    examples = load_split(evaluation_file(data), task)

    subtasks = as_subtasks(examples)
    predicted = [int(label) for label in predictor.predict(subtasks)]

    records = []
    if task == 'tf':
        records = [{'id': s.id, 'label': label, 'name': LABEL_NAMES[label]} for s, label in zip(subtasks, predicted)]
    else:
        # one batched forward pass; as_subtasks lists the options in the order inference asks for them
        labels = iter(predicted)
        for example in examples:
            per_option, final = run_mc_inference(lambda subtask: next(labels), example, return_options=True)
            records.append(prediction_record(example.id, per_option, final))

    folder = os.path.dirname(out)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(out, 'w', encoding='utf-8', newline='\n') as file:
        for record in records:
            file.write(json.dumps(record, ensure_ascii=False) + '\n')

    logger.info('Wrote %d predictions to %s', len(records), out)
    return len(records)


# Grid search and ablation

def gridsearch_main(data, model_config, train_config, out=None, lexicon_path=None, embeddings_path=None):
    train_path, test_path = resolve_data(data)
    if train_path is None:
        raise FileNotFoundError(f'{data} has no train.jsonl')

    lexicon, _ = _load_resources(lexicon_path, None)
    train_examples = load_split(train_path, model_config.task)
    test_examples = load_split(test_path, model_config.task) if test_path else None

    report = grid_search(model_config, train_examples, train_config, test_examples, lexicon, embeddings_path)
    if out:
        write_tsv(report.table, os.path.join(out, 'grid.tsv'))
    return report


def ablation_main(data, model_config, train_config, out=None, variants=ABLATION_VARIANTS, lexicon_path=None,
                  embeddings_path=None):
    train_path, test_path = resolve_data(data)
    if train_path is None or test_path is None:
        raise FileNotFoundError(f'{data} must hold both train.jsonl and test.jsonl for an ablation')

    lexicon, _ = _load_resources(lexicon_path, None)
    configs = [ModelConfig.from_dict({**model_config.to_dict(), 'variant': variant}) for variant in variants]

    table = ablation(configs, load_split(train_path, model_config.task), load_split(test_path, model_config.task),
                     train_config, lexicon, embeddings_path)
    if out:
        write_tsv(table, os.path.join(out, 'ablation.tsv'))
    return table


# Gradient check

_TOY_TOKENS = ['do', 'you', 'like', 'tea', 'yes', 'not', 'really']


def toy_gradcheck(variant, task='tf', seed=0, step=1e-5, tol=1e-4):
    """
        Finite-difference check of every parameter of a small model on a 3-token instance.

        The head is randomized first: a zero head passes no gradient to anything below it.

        Returns:
            GradCheckReport: One entry per named parameter.
    """
    rng = np.random.default_rng(seed)
    vocab = Vocabulary(tokens=[PAD_TOKEN, UNK_TOKEN] + _TOY_TOKENS, min_count=0)
    config = ModelConfig(variant=variant, task=task, hidden_size=3, embedding_dim=4, dropout=0.0)
    model = build_model(config, len(vocab), rng)
    model.head_W.data = rng.uniform(-1.0, 1.0, size=model.head_W.shape)
    model.head_b.data = rng.uniform(-1.0, 1.0, size=model.head_b.shape)

    question = ('you', 'like', 'tea')
    span, index = ((2, 3), 0) if task == 'mc' else (None, None)
    subtasks = [
        Subtask(id='toy-1', question=question, answer=('yes', 'not', 'really'), label=1, source_id='toy-1',
                option_span=span, option_index=index),
        Subtask(id='toy-2', question=question, answer=('not', 'tea'), label=2, source_id='toy-2',
                option_span=span, option_index=index),
    ]
    encoder = BatchEncoder(vocab, default_lexicon(), config)
    batch = pad_batch(encoder.encode_all(subtasks), config)

    def loss():
        return T.cross_entropy(model.forward(batch), batch.labels)

    return T.grad_check(loss, model.params, step=step, tol=tol)


def gradcheck_main(variants=GRADCHECK_VARIANTS, task='tf', seed=0, tol=1e-4):
    reports = []
    for variant in variants:
        report = toy_gradcheck(variant, task=task, seed=seed, tol=tol)
        logger.info('%s: %d parameters checked, %s', variant, len(report.entries),
                    'all pass' if report.passed else f'{len(report.failures())} failing')
        reports.append((variant, report))
    return reports


def gradcheck_frame(reports):
    return pd.DataFrame([{'model': variant, 'parameter': entry.name, 'size': entry.size,
                          'max_rel_error': entry.max_rel_error, 'passed': entry.passed}
                         for variant, report in reports for entry in report.entries])


# Demo

@dataclass
class DemoResult():
    answer: tuple
    label: Optional[int] = None
    probabilities: Optional[np.ndarray] = None
    per_option: Optional[list] = None
    final: object = None
    attention: Optional[dict] = None


class DemoSession():
    """
        A fixed question (and option list for multiple choice) asked to one trained model; every
        answer typed is classified on its own.
    """

    def __init__(self, checkpoint_path, question, options=None):
        checkpoint = load_checkpoint(checkpoint_path)
        self.predictor = restore_predictor(checkpoint)
        self.task = checkpoint.config.task

        self.question = tuple(tokenize(question))
        if not self.question:
            raise ValidationError('The question is empty')

        self.option_names = [option.strip() for option in options or [] if option.strip()]
        self.spans = None
        if self.task == 'mc':
            if not self.option_names:
                raise ConfigError('A multiple-choice model needs the list of options')
            self.spans = resolve_option_spans(list(self.question), [tokenize(o) for o in self.option_names], 'demo')
        elif self.option_names:
            raise CompatibilityError('Options were given but the model answers T/F questions')

    def classify(self, answer):
        tokens = tuple(tokenize(answer))
        if not tokens:
            raise ValidationError('The answer is empty')

        if self.task == 'tf':
            # the label is not used at inference
            subtask = Subtask(id='demo', question=self.question, answer=tokens, label=FALSE, source_id='demo')
            probabilities = self.predictor.predict_proba([subtask])[0]
            return DemoResult(answer=tokens, label=int(self.predictor(subtask)), probabilities=probabilities,
                              attention=self.predictor.attention(subtask))

        mc = MCExample(id='demo', question=self.question, options=self.spans, answer=tokens,
                       labels=(FALSE,) * len(self.spans))
        per_option, final = run_mc_inference(self.predictor, mc, return_options=True)
        return DemoResult(answer=tokens, per_option=per_option, final=final)

    def format(self, result):
        lines = []
        if result.label is not None:
            probabilities = ', '.join(f'{name} {p:.3f}' for name, p in zip(LABEL_NAMES, result.probabilities))
            lines.append(f'{LABEL_NAMES[result.label]}  ({probabilities})')
        else:
            for name, label in zip(self.option_names, result.per_option):
                lines.append(f'  {name}: {LABEL_NAMES[label]}')
            lines.append(f'final: {result.final.describe(self.option_names)}')

        for branch, weights in (result.attention or {}).items():
            tokens = result.answer if branch == 'answer' else self.question
            lines.append(f'{branch} attention: ' + ' '.join(f'{t}:{w:.2f}' for t, w in zip(tokens, weights)))

        return '\n'.join(lines)
