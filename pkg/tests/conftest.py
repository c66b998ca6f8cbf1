import os
import sys

import numpy as np
import pytest

current_dir = os.path.dirname(os.path.abspath(__file__))
src_folder = os.path.join(os.path.dirname(current_dir), 'src')
sys.path.append(src_folder)


from attention_utils import ModelConfig
from batch_utils import BatchEncoder, Subtask, pad_batch
from text_utils import PAD_TOKEN, UNK_TOKEN, Vocabulary, default_lexicon


TOY_WORDS = ['do', 'you', 'like', 'tea', 'coffee', 'or', 'yes', 'no', 'not', 'maybe', 'sure', 'a', 'little',
             'either', 'is', 'ok', 'thanks', 'it', 'all', 'depends']


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def vocab():
    return Vocabulary(tokens=[PAD_TOKEN, UNK_TOKEN] + TOY_WORDS, min_count=0)


@pytest.fixture
def lexicon():
    return default_lexicon()


@pytest.fixture
def small_config():
    def make(variant='semi-ian', task='tf', **overrides):
        settings = dict(variant=variant, task=task, hidden_size=4, embedding_dim=5, dropout=0.0)
        settings.update(overrides)
        return ModelConfig(**settings)
    return make


@pytest.fixture
def make_batch(vocab, lexicon):
    """
        Pad a list of (question, answer, label) string triples into a batch for a config.
    """
    def make(config, rows, span=None):
        encoder = BatchEncoder(vocab, lexicon, config)
        subtasks = [Subtask(id=f'row-{i}', question=tuple(q.split()), answer=tuple(a.split()), label=label,
                            source_id=f'row-{i}', option_span=span, option_index=0 if span else None)
                    for i, (q, a, label) in enumerate(rows)]
        return pad_batch(encoder.encode_all(subtasks), config)
    return make


def write_jsonl(path, rows):
    import json

    with open(path, 'w', encoding='utf-8') as file:
        for row in rows:
            file.write(json.dumps(row) + '\n')
    return str(path)
