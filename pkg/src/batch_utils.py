from dataclasses import dataclass
from typing import Optional

import numpy as np

from encoder_utils import option_encode, option_match_encode, rho_hot_encode
from errors import ValidationError
from text_utils import PAD


@dataclass(frozen=True)
class Subtask():
    """
        One 3-class decision: a T/F question-answer pair, or one option of a multiple-choice question.
    """
    id: str
    question: tuple
    answer: tuple
    label: int
    source_id: str = ''
    option_span: Optional[tuple] = None
    option_index: Optional[int] = None


def subtasks_from_tf(examples):
    return [Subtask(id=ex.id, question=ex.question, answer=ex.answer, label=ex.label, source_id=ex.id)
            for ex in examples]


@dataclass
class EncodedSubtask():
    id: str
    question_ids: np.ndarray
    question_feats: np.ndarray
    answer_ids: np.ndarray
    answer_feats: np.ndarray
    label: int


@dataclass
class Batch():
    """
        Padded arrays of a mini-batch. Masks are true exactly on each row's real-token prefix.
    """
    ids: list
    question_ids: np.ndarray
    question_mask: np.ndarray
    question_feats: np.ndarray
    answer_ids: np.ndarray
    answer_mask: np.ndarray
    answer_feats: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.ids)


class BatchEncoder():
    """
        Turns subtasks into vocabulary ids and lexical / option feature rows for one model config.
    """

    def __init__(self, vocab, lexicon, config):
        self.vocab = vocab
        self.lexicon = lexicon
        self.config = config

    def _features(self, tokens, parts, span, option_tokens=frozenset()):
        cfg = self.config
        width = sum(cfg.feature_part_width(part) for part in parts)
        feats = np.zeros((len(tokens), width))

        for position, token in enumerate(tokens):
            offset = 0
            for part in parts:
                part_width = cfg.feature_part_width(part)
                if part == 'lex':
                    feats[position, offset:offset + part_width] = rho_hot_encode(token, self.lexicon, cfg.lexical_cfg)
                elif part == 'opt':
                    feats[position, offset:offset + part_width] = option_encode(position, span, cfg.option_cfg)
                elif part == 'match':
                    feats[position, offset:offset + part_width] = option_match_encode(token, option_tokens,
                                                                                      cfg.option_cfg)
                # 'blank' keeps its zeros
                offset += part_width

        return feats

    def encode(self, subtask):
        """
            Encode one subtask.

            Args:
                subtask (Subtask): The subtask.

            Returns:
                EncodedSubtask: Ids and feature rows for its question and answer.
        """
        question_parts = self.config.question_feature_parts
        answer_parts = self.config.answer_feature_parts
        if ('opt' in question_parts or 'match' in answer_parts) and subtask.option_span is None:
            raise ValidationError(f'{subtask.id}: a multiple-choice model needs the option span of each subtask')
        if not subtask.answer:
            raise ValidationError(f'{subtask.id}: empty answer')
        if not subtask.question and self.config.uses_question:
            raise ValidationError(f'{subtask.id}: empty question')

        option_tokens = frozenset()
        if subtask.option_span is not None:
            start, end = subtask.option_span
            option_tokens = frozenset(subtask.question[start:end])

        return EncodedSubtask(
            id=subtask.id,
            question_ids=np.array(self.vocab.encode(subtask.question), dtype=np.int64),
            question_feats=self._features(subtask.question, question_parts, subtask.option_span),
            answer_ids=np.array(self.vocab.encode(subtask.answer), dtype=np.int64),
            answer_feats=self._features(subtask.answer, answer_parts, None, option_tokens),
            label=subtask.label,
        )

    def encode_all(self, subtasks):
        return [self.encode(subtask) for subtask in subtasks]


def _pad(sequences, feats, width):
    length = max(len(seq) for seq in sequences)
    batch = len(sequences)

    ids = np.full((batch, length), PAD, dtype=np.int64)
    mask = np.zeros((batch, length), dtype=bool)
    padded_feats = np.zeros((batch, length, width))

    for row, (seq, feat) in enumerate(zip(sequences, feats)):
        ids[row, :len(seq)] = seq
        mask[row, :len(seq)] = True
        if width:
            padded_feats[row, :len(seq)] = feat

    return ids, mask, padded_feats


def pad_batch(items, config):
    """
        Pad encoded subtasks to the longest question and answer of the batch.
    """
    question_ids, question_mask, question_feats = _pad([it.question_ids for it in items],
                                                       [it.question_feats for it in items],
                                                       config.question_feature_width)
    answer_ids, answer_mask, answer_feats = _pad([it.answer_ids for it in items],
                                                 [it.answer_feats for it in items],
                                                 config.answer_feature_width)

    return Batch(
        ids=[it.id for it in items],
        question_ids=question_ids,
        question_mask=question_mask,
        question_feats=question_feats,
        answer_ids=answer_ids,
        answer_mask=answer_mask,
        answer_feats=answer_feats,
        labels=np.array([it.label for it in items], dtype=np.int64),
    )


def make_batches(examples, batch_size, seed, config, epoch=0, shuffle=True):
    """
        Split encoded subtasks into padded mini-batches.

        Args:
            examples (list[EncodedSubtask]): The encoded subtasks.
            batch_size (int): Maximum batch size; the last batch holds the remainder.
            seed (int): Shuffle seed. Each epoch gets its own order, fixed by (seed, epoch).
            config (ModelConfig): Gives the feature widths.
            epoch (int): The epoch number.
            shuffle (bool): Keep the input order when False.

        Returns:
            list[Batch]: The batches.
    """
    if batch_size < 1:
        raise ValidationError(f'batch_size must be >= 1, got {batch_size}')

    order = np.arange(len(examples))
    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(len(examples))

    return [pad_batch([examples[i] for i in order[start:start + batch_size]], config)
            for start in range(0, len(examples), batch_size)]
