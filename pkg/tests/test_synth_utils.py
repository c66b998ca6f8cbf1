import json

import numpy as np
import pytest

from errors import ValidationError
from synth_utils import TF_LABEL_RATIO, generate_synthetic, make_mc_row, make_tf_row
from text_utils import MCExample, TFExample, load_dataset


@pytest.mark.parametrize('task', ['tf', 'mc'])
def test_same_seed_gives_identical_files(tmp_path, task):
    first = generate_synthetic(task, 50, 10, seed=3, out_folder=str(tmp_path / 'first'))
    second = generate_synthetic(task, 50, 10, seed=3, out_folder=str(tmp_path / 'second'))
    other = generate_synthetic(task, 50, 10, seed=4, out_folder=str(tmp_path / 'other'))

    for a, b in zip(first, second):
        with open(a, 'rb') as file_a, open(b, 'rb') as file_b:
            assert file_a.read() == file_b.read()
    with open(first[0], 'rb') as file_a, open(other[0], 'rb') as file_b:
        assert file_a.read() != file_b.read()


@pytest.mark.parametrize('task, example_type', [('tf', TFExample), ('mc', MCExample)])
def test_generated_files_load_cleanly(tmp_path, task, example_type):
    train_path, test_path = generate_synthetic(task, 300, 40, seed=0, out_folder=str(tmp_path))

    train = load_dataset(train_path, task)
    test = load_dataset(test_path, task)

    assert len(train) == 300
    assert len(test) == 40
    assert all(isinstance(example, example_type) for example in train + test)
    assert train[0].id == f'{task}-train-000000'


def test_tf_label_balance(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.array([make_tf_row(rng, i, 'train')['label'] for i in range(3000)])
    shares = np.bincount(labels, minlength=3) / len(labels)
    np.testing.assert_allclose(shares, TF_LABEL_RATIO, atol=0.03)


def test_mc_partial_acceptance_answers_are_labelled():
    rng = np.random.default_rng(1)
    rows = [make_mc_row(rng, i, 'train') for i in range(500)]

    either = [row for row in rows if 'either is ok' in row['answer']]
    assert either and all(set(row['labels']) == {1} for row in either)

    excepted = [row for row in rows if 'except' in row['answer']]
    assert excepted
    for row in excepted:
        rejected = [option for option, label in zip(row['options'], row['labels']) if label == 0]
        assert len(rejected) == 1
        assert rejected[0] in row['answer']


def test_rows_are_json_lines(tmp_path):
    train_path, _ = generate_synthetic('mc', 5, 0, seed=0, out_folder=str(tmp_path))
    with open(train_path, encoding='utf-8') as file:
        rows = [json.loads(line) for line in file]

    assert len(rows) == 5
    assert set(rows[0]) == {'id', 'question', 'options', 'answer', 'labels'}


def test_unknown_task(tmp_path):
    with pytest.raises(ValidationError):
        generate_synthetic('qa', 1, 1, seed=0, out_folder=str(tmp_path))
