import json
import logging
import os

import numpy as np

from errors import ValidationError
from text_utils import FALSE, TRUE, UNCERTAIN

logger = logging.getLogger(__name__)

# False / True / Uncertain proportions of the T/F corpus
TF_LABEL_RATIO = (0.43, 0.45, 0.12)

_TF_TOPICS = [
    ('do you like {x}', ['running', 'tea', 'coffee', 'swimming', 'music', 'cooking', 'reading', 'dancing', 'football',
                         'chocolate', 'hiking', 'painting']),
    ('are you a {x}', ['teacher', 'student', 'doctor', 'driver', 'nurse', 'farmer', 'lawyer', 'programmer', 'singer']),
    ('have you ever been to {x}', ['paris', 'beijing', 'london', 'tokyo', 'the hospital', 'the museum', 'the beach']),
    ('do you {x} every day', ['exercise', 'walk', 'cook', 'read', 'drive', 'work', 'study']),
    ('would you buy {x}', ['insurance', 'a new car', 'a house', 'a phone', 'health insurance', 'a ticket']),
    ('is your {x} good', ['health', 'job', 'sleep', 'memory', 'english']),
]

_TF_ANSWERS = {
    TRUE: ['yes', 'yes of course', 'sure', 'a little', 'of course', 'yeah', 'absolutely', 'definitely',
           'yes i do', 'i do', 'ok', 'yes very much', 'yep', 'certainly', 'yes {x}'],
    FALSE: ['no', 'not at all', 'no i do not', 'never', 'nope', 'i do not', 'not really', 'no way', 'no never',
            'definitely not', 'no not {x}'],
    UNCERTAIN: ['you guess', 'it all depends', 'i am not sure', 'maybe', 'sometimes', 'hard to say',
                'what time is it', 'i lost my job', 'the weather is nice today', 'let me think', 'who knows'],
}

# Answers that only make sense for one question template
_TF_TEMPLATE_ANSWERS = {
    ('are you a {x}', FALSE): ['i was a {x} last year', 'i used to be a {x}'],
}

_PREFIXES = ['', '', '', 'well ,', 'hmm ,', 'um', 'honestly ,', 'oh']
_SUFFIXES = ['', '', '', '.', '!', 'thanks', 'haha']

# (template, option pool, extra answers that reject every option)
_MC_QUESTIONS = [
    ('would you like {0} or {1}', ['coffee', 'tea', 'milk', 'juice', 'water', 'soda'], []),
    ('do you prefer {0} or {1}', ['cats', 'dogs', 'birds', 'fish', 'rabbits'], []),
    ('are you usually {0} , {1} , or {2} to work', ['walking', 'cycling', 'driving', 'running'], ['by train']),
    ('which do you play , {0} , {1} or {2}', ['tennis', 'football', 'chess', 'golf', 'basketball'], []),
    ('should we meet on {0} or {1}', ['monday', 'tuesday', 'friday', 'sunday'], ['next month']),
    ('do you want {0} , {1} or {2} insurance', ['health', 'car', 'travel', 'home', 'life'], []),
]

_MC_ONE = ['{a}', 'i prefer {a}', '{a} please', '{a} of course', 'just {a}', 'i choose {a}', 'only {a}']
_MC_TWO = ['{a} and {b}', 'both {a} and {b}', '{a} or {b} is fine']
_MC_ALL = ['either is ok', 'both are fine', 'all of them', 'anything is ok']
_MC_EXCEPT = ['except {a}', 'anything except {a}', 'all except {a}']
_MC_NONE = ['no thanks', 'neither', 'none of them', 'no , thanks']
_MC_UNCERTAIN = ['it all depends', 'i lost my job', 'you guess', 'maybe later', 'i am not sure']


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


def _decorate(rng, text):
    # Paraphrase noise: filler prefix / suffix around the core answer
    parts = [_pick(rng, _PREFIXES), text, _pick(rng, _SUFFIXES)]
    return ' '.join(part for part in parts if part)


def make_tf_row(rng, index, split):
    template, fillers = _TF_TOPICS[int(rng.integers(len(_TF_TOPICS)))]
    topic = _pick(rng, fillers)
    label = int(rng.choice(3, p=TF_LABEL_RATIO))
    answers = _TF_ANSWERS[label] + _TF_TEMPLATE_ANSWERS.get((template, label), [])
    answer = _pick(rng, answers).format(x=topic)

    return {
        'id': f'tf-{split}-{index:06d}',
        'question': template.format(x=topic),
        'answer': _decorate(rng, answer),
        'label': label,
    }


def make_mc_row(rng, index, split):
    template, pool, rejections = _MC_QUESTIONS[int(rng.integers(len(_MC_QUESTIONS)))]
    count = template.count('{')
    options = [str(option) for option in rng.choice(pool, size=count, replace=False)]
    n = len(options)

    style = int(rng.choice(6, p=(0.40, 0.12, 0.12, 0.10, 0.14, 0.12)))
    chosen = [int(i) for i in rng.permutation(n)]

    if style == 0:
        answer = _pick(rng, _MC_ONE).format(a=options[chosen[0]])
        labels = [TRUE if i == chosen[0] else FALSE for i in range(n)]
    elif style == 1 and n >= 3:
        pair = sorted(chosen[:2])
        answer = _pick(rng, _MC_TWO).format(a=options[pair[0]], b=options[pair[1]])
        labels = [TRUE if i in pair else FALSE for i in range(n)]
    elif style in (1, 2):
        answer = _pick(rng, _MC_ALL)
        labels = [TRUE] * n
    elif style == 3:
        answer = _pick(rng, _MC_EXCEPT).format(a=options[chosen[0]])
        labels = [FALSE if i == chosen[0] else TRUE for i in range(n)]
    elif style == 4:
        answer = _pick(rng, _MC_NONE + rejections)
        labels = [FALSE] * n
    else:
        answer = _pick(rng, _MC_UNCERTAIN)
        labels = [UNCERTAIN] * n

    return {
        'id': f'mc-{split}-{index:06d}',
        'question': template.format(*options),
        'options': options,
        'answer': _decorate(rng, answer),
        'labels': labels,
    }


def _write_jsonl(rows, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        for row in rows:
            file.write(json.dumps(row, ensure_ascii=False) + '\n')


def generate_synthetic(task, n_train, n_test, seed, out_folder):
    """
        Write a template-based train/test corpus for desk-scale experiments.

        T/F answers mix affirmative, negative and uncertain or off-topic styles with filler noise,
        labelled in roughly the False/True/Uncertain proportions of the T/F corpus. Multiple-choice
        rows are option-contained questions with per-option labels, including partial acceptance
        ("either is ok", "except cycling").

        Args:
            task (str): 'tf' or 'mc'.
            n_train (int): Number of training rows.
            n_test (int): Number of test rows.
            seed (int): Generator seed. The same seed writes byte-identical files.
            out_folder (str): Folder receiving train.jsonl and test.jsonl.

        Returns:
            tuple[str, str]: Paths of the train and test files.
    """
    if task not in ('tf', 'mc'):
        raise ValidationError(f'Unknown task {task!r}, expected tf or mc')

    make_row = make_tf_row if task == 'tf' else make_mc_row
    rng = np.random.default_rng(seed)
    os.makedirs(out_folder, exist_ok=True)

    paths = []
    for split, count in (('train', n_train), ('test', n_test)):
        rows = [make_row(rng, i, split) for i in range(count)]
        path = os.path.join(out_folder, f'{split}.jsonl')
        _write_jsonl(rows, path)
        logger.info('Wrote %d %s rows to %s', count, task.upper(), path)
        paths.append(path)

    return tuple(paths)
