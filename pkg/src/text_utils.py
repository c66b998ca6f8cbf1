import json
import logging
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Annotated, Union

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, StrictInt, model_validator

from errors import FormatError, ParseError, SpanResolutionError, ValidationError

logger = logging.getLogger(__name__)

# Answer labels, as the corpora number them
FALSE, TRUE, UNCERTAIN = 0, 1, 2
LABEL_NAMES = ('false', 'true', 'uncertain')

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = '<pad>', '<unk>'

LEXICON_CLASSES = ('affirmative', 'privative', 'suspicious', 'positive', 'negative', 'supposed')

_TOKEN_PATTERN = re.compile(r'\w+|[^\w\s]')


def tokenize(text):
    """
        Lowercase the text and split it into words and standalone punctuation marks.

        Args:
            text (str): Raw text.

        Returns:
            list[str]: The tokens, in order.
    """
    return _TOKEN_PATTERN.findall(text.lower())


def as_tokens(value):
    # Pre-tokenized input (a JSON array) is kept as is, so externally segmented text goes through unchanged
    if isinstance(value, str):
        return tokenize(value)
    return [str(token) for token in value]


# Vocabulary

@dataclass
class Vocabulary():
    tokens: list
    min_count: int = 2
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValidationError('A vocabulary must start with the PAD and UNK tokens')
        self.index = {token: i for i, token in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def lookup(self, token):
        return self.index.get(token, UNK)

    def encode(self, tokens):
        return [self.lookup(token) for token in tokens]


def build_vocab(corpus, min_count=2):
    """
        Build a vocabulary from tokenized texts.

        Tokens seen more than `min_count` times are kept. PAD and UNK take indices 0 and 1,
        the rest follow by descending count, ties broken alphabetically.

        Args:
            corpus (iterable[list[str]]): Tokenized texts.
            min_count (int): Tokens must occur strictly more often than this.

        Returns:
            Vocabulary: The vocabulary.
    """
    if min_count < 0:
        raise ValidationError(f'min_count must be >= 0, got {min_count}')

    counts = Counter(token for tokens in corpus for token in tokens)
    counts.pop(PAD_TOKEN, None)
    counts.pop(UNK_TOKEN, None)

    kept = sorted((token for token, count in counts.items() if count > min_count),
                  key=lambda token: (-counts[token], token))

    return Vocabulary(tokens=[PAD_TOKEN, UNK_TOKEN] + kept, min_count=min_count)


# Lexicon

@dataclass(frozen=True)
class Lexicon():
    """
        Keyword dictionary of the six lexical classes. The order of LEXICON_CLASSES fixes
        which block of the lexical embedding each class owns.
    """
    words: dict

    def __post_init__(self):
        unknown = set(self.words) - set(LEXICON_CLASSES)
        if unknown:
            raise ValidationError(f'Unknown lexicon classes: {sorted(unknown)}. Expected {list(LEXICON_CLASSES)}')

    def classes_of(self, token):
        return [j for j, name in enumerate(LEXICON_CLASSES) if token in self.words.get(name, ())]

    def to_dict(self):
        return {name: sorted(self.words.get(name, ())) for name in LEXICON_CLASSES}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ValidationError('A lexicon must be a JSON object mapping class names to word lists')

        unknown = set(data) - set(LEXICON_CLASSES)
        if unknown:
            raise ValidationError(f'Unknown lexicon classes: {sorted(unknown)}. Expected {list(LEXICON_CLASSES)}')

        words = {}
        for name in LEXICON_CLASSES:
            entries = data.get(name, [])
            if not isinstance(entries, list) or not all(isinstance(w, str) for w in entries):
                raise ValidationError(f'Lexicon class {name!r} must map to a list of strings')
            words[name] = frozenset(w.lower() for w in entries)

        return cls(words=words)


# Starter lexicon: small, English, not the keyword lists used for the original corpora
_STARTER_LEXICON = {
    'affirmative': ['yes', 'yeah', 'yep', 'sure', 'ok', 'okay', 'course', 'absolutely', 'definitely', 'certainly',
                    'right', 'correct', 'indeed', 'either', 'both', 'all'],
    'privative': ['no', 'not', 'never', 'nope', 'neither', 'none', 'nothing', 'nobody', 'except', 'without'],
    'suspicious': ['maybe', 'perhaps', 'possibly', 'guess', 'depends', 'unsure', 'sometimes', 'whether', 'hmm'],
    'positive': ['like', 'love', 'enjoy', 'good', 'great', 'fine', 'happy', 'nice', 'prefer', 'little'],
    'negative': ['hate', 'dislike', 'bad', 'terrible', 'awful', 'sad', 'boring', 'lost'],
    'supposed': ['think', 'suppose', 'probably', 'if', 'would', 'should', 'could', 'might', 'was', 'last'],
}


def default_lexicon():
    return Lexicon.from_dict(_STARTER_LEXICON)


def load_lexicon(path):
    """
        Load a lexicon from a JSON object mapping class names to word arrays.

        Args:
            path (str): Path to the JSON file.

        Returns:
            Lexicon: The lexicon. Classes missing from the file are empty.
    """
    with open(path, 'r', encoding='utf-8') as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, path=path, line=e.lineno) from e

    return Lexicon.from_dict(data)


def save_lexicon(lexicon, path):
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(lexicon.to_dict(), file, indent=4, ensure_ascii=False)


# Word embeddings

@dataclass
class EmbeddingTable():
    dim: int
    vectors: dict

    def lookup(self, token):
        return self.vectors.get(token, self.vectors[UNK_TOKEN])

    def matrix(self, vocab):
        """
            Stack the vectors of `vocab` in index order into a [len(vocab), dim] array.
        """
        return np.stack([self.lookup(token) for token in vocab.tokens]).astype(np.float64)


def _fill_missing(vectors, vocab, dim, rng):
    # Sampled in vocabulary order so a seed always gives the same vectors
    for token in vocab.tokens:
        if token == PAD_TOKEN:
            vectors[token] = np.zeros(dim)
        elif token not in vectors:
            vectors[token] = rng.uniform(-0.1, 0.1, size=dim)
    return EmbeddingTable(dim=dim, vectors=vectors)


def _is_header(parts):
    return len(parts) == 2 and all(part.isdigit() for part in parts)


def load_embeddings(path, vocab, rng, dim=None):
    """
        Read a GloVe-style text file (a token followed by `dim` floats per line).

        Only vectors of vocabulary tokens are kept. Vocabulary tokens absent from the file get
        uniform(-0.1, 0.1) vectors from `rng`; PAD is all zeros. A word2vec "count dim" header
        line is skipped.

        Args:
            path (str): The embedding file.
            vocab (Vocabulary): Tokens to keep.
            rng (np.random.Generator): The run's seeded generator.
            dim (int, optional): Expected dimension. Defaults to the file's.

        Returns:
            EmbeddingTable: One vector per vocabulary token.

        Raises:
            ParseError: A line has the wrong number of floats or a non-numeric value.
            FormatError: The file's dimension differs from `dim`.
    """
    vectors = {}
    file_dim = None
    found = 0

    with open(path, 'r', encoding='utf-8') as file:
        for line_number, line in enumerate(file, start=1):
            parts = line.rstrip('\n').split(' ')
            if not line.strip():
                continue
            if line_number == 1 and _is_header(parts):
                continue

            token, values = parts[0], parts[1:]

            if file_dim is None:
                file_dim = len(values)
                if file_dim == 0:
                    raise ParseError('line has no vector values', path=path, line=line_number)
                if dim is not None and file_dim != dim:
                    raise FormatError(f'{path} holds {file_dim}-dimensional vectors, expected {dim}')

            if len(values) != file_dim:
                raise ParseError(f'expected {file_dim} floats, found {len(values)}', path=path, line=line_number)

            if token not in vocab or token in vectors:
                continue

            try:
                vectors[token] = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as e:
                raise ParseError(f'non-numeric value ({e})', path=path, line=line_number) from e
            found += 1

    if file_dim is None:
        raise FormatError(f'{path} holds no embedding vectors')

    logger.info('Loaded %d of %d vocabulary vectors from %s', found, len(vocab), path)
    return _fill_missing(vectors, vocab, file_dim, rng)


# Examples

@dataclass(frozen=True)
class TFExample():
    id: str
    question: tuple
    answer: tuple
    label: int

    def __post_init__(self):
        if self.label not in (FALSE, TRUE, UNCERTAIN):
            raise ValidationError(f'{self.id}: label {self.label} is not one of 0, 1, 2')
        if not self.question or not self.answer:
            raise ValidationError(f'{self.id}: question and answer must not be empty')


@dataclass(frozen=True)
class MCExample():
    """
        An option-contained multiple-choice question. Option spans are half-open
        [start, end) token ranges of the question.
    """
    id: str
    question: tuple
    options: tuple
    answer: tuple
    labels: tuple

    def __post_init__(self):
        if not self.options:
            raise ValidationError(f'{self.id}: a multiple-choice question needs at least one option')
        if len(self.labels) != len(self.options):
            raise ValidationError(f'{self.id}: {len(self.labels)} labels for {len(self.options)} options')
        if any(label not in (FALSE, TRUE, UNCERTAIN) for label in self.labels):
            raise ValidationError(f'{self.id}: labels must be 0, 1 or 2, got {list(self.labels)}')
        if not self.question or not self.answer:
            raise ValidationError(f'{self.id}: question and answer must not be empty')
        for start, end in self.options:
            if not 0 <= start < end <= len(self.question):
                raise ValidationError(f'{self.id}: option span {(start, end)} outside the question')


TokenField = Union[str, list[str]]
# JSON true and 1.0 are not labels
LabelField = Annotated[StrictInt, Field(ge=FALSE, le=UNCERTAIN)]


class TFRecord(BaseModel):
    model_config = ConfigDict(extra='ignore')

    id: Union[str, None] = None
    question: TokenField
    answer: TokenField
    label: LabelField


class MCRecord(BaseModel):
    model_config = ConfigDict(extra='ignore')

    id: Union[str, None] = None
    question: TokenField
    options: list[TokenField]
    answer: TokenField
    labels: list[LabelField]

    @model_validator(mode='after')
    def check_label_count(self):
        if not self.options:
            raise ValueError('at least one option is required')
        if len(self.labels) != len(self.options):
            raise ValueError(f'{len(self.labels)} labels for {len(self.options)} options')
        return self


def _find_all(haystack, needle):
    width = len(needle)
    return [i for i in range(len(haystack) - width + 1) if tuple(haystack[i:i + width]) == tuple(needle)]


def resolve_option_spans(question, options, example_id=''):
    """
        Locate every option inside the tokenized question.

        Longer options are placed first and each takes its leftmost match that does not overlap
        an option placed before it; if every match overlaps, the leftmost match is used.

        Args:
            question (list[str]): Question tokens.
            options (list[list[str]]): Option tokens.
            example_id (str): Used in error messages.

        Returns:
            tuple[tuple[int, int]]: Half-open spans, in option order.

        Raises:
            SpanResolutionError: If an option does not occur in the question.
    """
    spans = [None] * len(options)
    taken = set()

    for i in sorted(range(len(options)), key=lambda i: (-len(options[i]), i)):
        option = options[i]
        matches = _find_all(question, option) if option else []
        if not matches:
            raise SpanResolutionError(f'{example_id}: option {" ".join(option)!r} not found in the question')

        free = [m for m in matches if not taken & set(range(m, m + len(option)))]
        start = free[0] if free else matches[0]
        spans[i] = (start, start + len(option))
        taken.update(range(start, start + len(option)))

    return tuple(spans)


def sniff_task(path):
    """
        Guess whether a JSONL dataset holds T/F or multiple-choice rows from its first row.

        Returns:
            str | None: 'tf', 'mc', or None for an empty file.
    """
    with open(path, 'r', encoding='utf-8') as file:
        for line in file:
            if line.strip():
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    return None
                if isinstance(row, dict):
                    return 'mc' if 'options' in row else 'tf'
                return None
    return None


def _pydantic_message(error):
    first = error.errors()[0]
    where = '.'.join(str(part) for part in first.get('loc', ())) or 'row'
    return f'{where}: {first.get("msg", "invalid value")}'


def load_dataset(path, task):
    """
        Load and validate a JSONL dataset.

        Args:
            path (str): The JSONL file.
            task (str): 'tf' or 'mc'.

        Returns:
            list[TFExample] | list[MCExample]: The validated examples.

        Raises:
            ParseError: A line is not valid JSON.
            ValidationError: A row breaks the schema (bad label, label/option count mismatch...).
            SpanResolutionError: An option does not appear in its question.
    """
    if task not in ('tf', 'mc'):
        raise ValidationError(f'Unknown task {task!r}, expected tf or mc')

    record_model = TFRecord if task == 'tf' else MCRecord
    stem = os.path.splitext(os.path.basename(path))[0]
    examples = []

    with open(path, 'r', encoding='utf-8') as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue

            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(e.msg, path=path, line=line_number) from e

            try:
                record = record_model.model_validate(row)
            except pydantic.ValidationError as e:
                raise ValidationError(f'{path}:{line_number}: {_pydantic_message(e)}') from e

            example_id = record.id if record.id is not None else f'{stem}-{line_number}'
            question = tuple(as_tokens(record.question))
            answer = tuple(as_tokens(record.answer))

            try:
                if task == 'tf':
                    examples.append(TFExample(id=example_id, question=question, answer=answer, label=record.label))
                else:
                    options = [as_tokens(option) for option in record.options]
                    spans = resolve_option_spans(list(question), options, example_id)
                    examples.append(MCExample(id=example_id, question=question, options=spans, answer=answer,
                                              labels=tuple(record.labels)))
            except ValidationError as e:
                raise type(e)(f'{path}:{line_number}: {e}') from e

    logger.info('Loaded %d %s examples from %s', len(examples), task.upper(), path)
    return examples
