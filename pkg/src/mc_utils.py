from dataclasses import dataclass

from batch_utils import Subtask
from errors import SizeError, ValidationError
from text_utils import LABEL_NAMES, TRUE, UNCERTAIN, MCExample

MAX_OPTIONS = 16


@dataclass(frozen=True)
class FinalMCLabel():
    """
        One element of the answer-label set: a subset of option indices (the empty subset is Null)
        or Uncertain.
    """
    uncertain: bool = False
    options: tuple = ()

    def __post_init__(self):
        if self.uncertain and self.options:
            raise ValidationError('An Uncertain label carries no option')
        if tuple(sorted(set(self.options))) != tuple(self.options):
            raise ValidationError(f'Option indices must be sorted and distinct, got {self.options}')

    @property
    def is_null(self):
        return not self.uncertain and not self.options

    def to_json(self):
        return 'uncertain' if self.uncertain else list(self.options)

    def describe(self, option_names=None):
        if self.uncertain:
            return 'Uncertain'
        if not self.options:
            return 'Null'
        names = [option_names[i] if option_names else f'option{i + 1}' for i in self.options]
        return '{' + ', '.join(names) + '}'


UNCERTAIN_LABEL = FinalMCLabel(uncertain=True)
NULL_LABEL = FinalMCLabel()


def enumerate_label_set(options):
    """
        Every answer category of a multiple-choice question.

        Subsets come in binary-counting order (bit i of the counter selects option i, so Null is
        first), followed by Uncertain.

        Args:
            options (Sequence | int): The option set, or its size.

        Returns:
            list[FinalMCLabel]: 2 ** n + 1 labels.

        Raises:
            SizeError: If there are more than 16 options.
    """
    n = options if isinstance(options, int) else len(options)
    if n > MAX_OPTIONS:
        raise SizeError(f'{n} options: at most {MAX_OPTIONS} are supported')

    subsets = [FinalMCLabel(options=tuple(i for i in range(n) if counter >> i & 1)) for counter in range(2 ** n)]
    return subsets + [UNCERTAIN_LABEL]


def transform(mc):
    """
        Split a multiple-choice example into one 3-class subtask per option.

        Subtask i keeps the question and answer, marks option i as the active span and takes the
        option's own label.

        Args:
            mc (MCExample): The example.

        Returns:
            list[Subtask]: The subtasks, in option order.
    """
    return [Subtask(id=f'{mc.id}#{i}', question=mc.question, answer=mc.answer, label=label,
                    source_id=mc.id, option_span=span, option_index=i)
            for i, (span, label) in enumerate(zip(mc.options, mc.labels))]


def regroup(subtasks):
    """
        Rebuild the multiple-choice examples from their subtasks, in order of first appearance.
    """
    for subtask in subtasks:
        if subtask.option_index is None or subtask.option_span is None:
            raise ValidationError(f'{subtask.id} is not an option subtask')

    groups = {}
    for subtask in subtasks:
        groups.setdefault(subtask.source_id, []).append(subtask)

    examples = []
    for source_id, group in groups.items():
        group = sorted(group, key=lambda s: s.option_index)
        if [s.option_index for s in group] != list(range(len(group))):
            raise ValidationError(f'{source_id}: option subtasks are missing or repeated')

        first = group[0]
        examples.append(MCExample(id=source_id, question=first.question,
                                  options=tuple(s.option_span for s in group),
                                  answer=first.answer,
                                  labels=tuple(s.label for s in group)))
    return examples


def aggregate(per_option):
    """
        Combine per-option labels into the final category.

        Any Uncertain option makes the whole answer Uncertain; otherwise the True options form the
        chosen subset, which is Null when none is True.

        Args:
            per_option (Sequence[int]): One label in {0, 1, 2} per option.

        Returns:
            FinalMCLabel: The final category.
    """
    labels = [int(label) for label in per_option]
    if not labels:
        raise ValidationError('aggregate needs one label per option, got none')
    if any(label not in (0, 1, 2) for label in labels):
        raise ValidationError(f'Per-option labels must be 0, 1 or 2, got {labels}')

    if UNCERTAIN in labels:
        return UNCERTAIN_LABEL
    return FinalMCLabel(options=tuple(i for i, label in enumerate(labels) if label == TRUE))


def predict_options(predict, mc, answer=None):
    """
        Run a per-option classifier once per option of a question.

        Args:
            predict (callable): Maps one Subtask to a label in {0, 1, 2}.
            mc (MCExample): The question and its options.
            answer (tuple[str], optional): Answer tokens replacing the example's own.

        Returns:
            list[int]: One label per option.
    """
    subtasks = transform(mc)
    if answer is not None:
        subtasks = [Subtask(id=s.id, question=s.question, answer=tuple(answer), label=s.label,
                            source_id=s.source_id, option_span=s.option_span, option_index=s.option_index)
                    for s in subtasks]
    return [int(predict(subtask)) for subtask in subtasks]


def run_mc_inference(predict, mc, answer=None, return_options=False):
    """
        Classify every option of `mc` with `predict` and aggregate the per-option labels.

        Args:
            predict (callable): Maps one Subtask to a label in {0, 1, 2}.
            mc (MCExample): The question and its options.
            answer (tuple[str], optional): Answer tokens replacing the example's own.
            return_options (bool): Also return the per-option labels.

        Returns:
            FinalMCLabel | tuple[list[int], FinalMCLabel]: The final category, preceded by the
            per-option labels when `return_options` is set.
    """
    per_option = predict_options(predict, mc, answer)
    final = aggregate(per_option)
    if return_options:
        return per_option, final
    return final


def prediction_record(mc_id, per_option, final):
    return {
        'id': mc_id,
        'per_option': [LABEL_NAMES[label] for label in per_option],
        'final': final.to_json(),
    }
