import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from errors import DimensionError, EmptySupportError, LabelIndexError, ShapeError

LOG_EPSILON = 1e-12
# below this gradient scale grad_check compares absolute differences
RELATIVE_ERROR_FLOOR = 1e-5

_local = threading.local()


class Tensor():
    """
        A dense float64 array that can take part in reverse-mode differentiation.

        Tensors produced by an operation while a Tape is active are recorded on that tape.
        Outside of a tape no graph is kept, which is what inference and finite differences use.
    """

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        label = f', name={self.name!r}' if self.name else ''
        return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})'


def constant(data):
    return Tensor(data, requires_grad=False)


def parameter(data, name=None):
    return Tensor(data, requires_grad=True, name=name)


@dataclass
class TapeEntry():
    op: str
    inputs: tuple
    output: Tensor
    backward: Callable


@dataclass
class Tape():
    """
        Ordered record of operations. Entries are appended as operations run, so every entry's
        inputs were produced before it and reverse order is a valid backward order.
    """
    entries: list = field(default_factory=list)

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info):
        _tape_stack().pop()
        return False

    def record(self, op, inputs, output, backward_fn):
        self.entries.append(TapeEntry(op, tuple(inputs), output, backward_fn))
        output._tape = self

    def backward(self, loss):
        """
            Propagate gradients from a scalar loss to every tensor recorded on this tape.

            Each entry is visited once, in reverse order. Gradients of tensors used several
            times are summed. Leaf tensors accumulate into their existing `.grad`.
            The tape is consumed afterwards.

            Args:
                loss (Tensor): A 0-d tensor recorded on this tape.
        """
        grads = {id(loss): np.ones_like(loss.data)}
        leaves = {}

        for entry in reversed(self.entries):
            upstream = grads.pop(id(entry.output), None)
            if upstream is None:
                continue
            entry.output.grad = upstream

            input_grads = entry.backward(upstream)
            for tensor, grad in zip(entry.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grad if key not in grads else grads[key] + grad
                if tensor._tape is not self:
                    leaves[key] = tensor

        for key, tensor in leaves.items():
            grad = grads[key]
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad

        self.entries.clear()


def _tape_stack():
    if not hasattr(_local, 'stack'):
        _local.stack = []
    return _local.stack


def active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


def apply_op(op, inputs, out_data, backward_fn):
    """
        Build the output tensor of an operation and record it on the active tape.

        Args:
            op (str): Operation name, kept on the tape entry.
            inputs (list[Tensor]): The tensor inputs, in the order `backward_fn` returns grads.
            out_data (np.ndarray): The forward result.
            backward_fn (callable): Maps the upstream gradient to one gradient per input
                (or None for inputs that receive nothing).

        Returns:
            Tensor: The output tensor.
    """
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=requires_grad)

    tape = active_tape()
    if requires_grad and tape is not None:
        tape.record(op, inputs, out, backward_fn)

    return out


def backward(loss):
    """
        Run reverse-mode differentiation from a scalar loss.

        Args:
            loss (Tensor): A 0-d tensor.

        Raises:
            ShapeError: If the loss is not a scalar.
    """
    if loss.shape != ():
        raise ShapeError(f'backward needs a scalar loss, got shape {loss.shape}')

    # A loss that does not depend on any parameter was never recorded
    if loss._tape is None:
        return

    loss._tape.backward(loss)


def _check_same_shape(op, a, b):
    if a.shape != b.shape:
        raise DimensionError(f'{op}: shapes {a.shape} and {b.shape} differ')


# Linear algebra

def matmul(a, b):
    """
        Matrix product of `a` [..., m, k] with a matrix `b` [k, n].
    """
    if a.ndim < 2 or b.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise DimensionError(f'matmul: cannot multiply {a.shape} by {b.shape}')

    a_data, b_data = a.data, b.data
    k, n = b_data.shape

    def backward_fn(g):
        grad_a = g @ b_data.T
        grad_b = a_data.reshape(-1, k).T @ g.reshape(-1, n)
        return grad_a, grad_b

    return apply_op('matmul', [a, b], a_data @ b_data, backward_fn)


def batch_dot(a, v):
    """
        Row-wise inner product of `a` [..., n, e] with one vector `v` [..., e] per leading index.
    """
    if a.ndim < 2 or a.shape[:-2] + a.shape[-1:] != v.shape:
        raise DimensionError(f'batch_dot: {a.shape} does not match {v.shape}')

    a_data, v_data = a.data, v.data

    def backward_fn(g):
        grad_a = g[..., :, None] * v_data[..., None, :]
        grad_v = np.einsum('...n,...ne->...e', g, a_data)
        return grad_a, grad_v

    return apply_op('batch_dot', [a, v], np.einsum('...ne,...e->...n', a_data, v_data), backward_fn)


def weighted_sum(weights, values):
    """
        Context vector: sum over positions of `weights` [..., n] times rows of `values` [..., n, d].
    """
    if values.ndim < 2 or weights.shape != values.shape[:-1]:
        raise DimensionError(f'weighted_sum: weights {weights.shape} do not match values {values.shape}')

    w_data, v_data = weights.data, values.data

    def backward_fn(g):
        grad_w = np.einsum('...d,...nd->...n', g, v_data)
        grad_v = w_data[..., :, None] * g[..., None, :]
        return grad_w, grad_v

    return apply_op('weighted_sum', [weights, values], np.einsum('...n,...nd->...d', w_data, v_data), backward_fn)


# Elementwise operations

def add(a, b):
    _check_same_shape('add', a, b)
    return apply_op('add', [a, b], a.data + b.data, lambda g: (g, g))


def mul(a, b):
    _check_same_shape('mul', a, b)
    a_data, b_data = a.data, b.data
    return apply_op('mul', [a, b], a_data * b_data, lambda g: (g * b_data, g * a_data))


def scale(x, factor):
    return apply_op('scale', [x], x.data * factor, lambda g: (g * factor,))


def add_bias(x, bias):
    """
        Add a bias vector to every row of `x`. This is the only broadcasting addition.
    """
    if bias.ndim != 1 or x.ndim < 1 or x.shape[-1] != bias.shape[0]:
        raise DimensionError(f'add_bias: bias {bias.shape} does not fit rows of {x.shape}')

    width = bias.shape[0]
    return apply_op('add_bias', [x, bias], x.data + bias.data, lambda g: (g, g.reshape(-1, width).sum(axis=0)))


def add_scalar(x, bias):
    """
        Add a one-element bias tensor to every entry of `x`.
    """
    if bias.data.size != 1:
        raise DimensionError(f'add_scalar: bias must hold one value, got shape {bias.shape}')

    bias_shape = bias.shape
    return apply_op('add_scalar', [x, bias], x.data + bias.data.reshape(()),
                    lambda g: (g, np.full(bias_shape, g.sum())))


def sigmoid(x):
    # tanh form is stable for large |x| and gives exactly 0.5 at 0
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return apply_op('sigmoid', [x], out, lambda g: (g * out * (1.0 - out),))


def tanh(x):
    out = np.tanh(x.data)
    return apply_op('tanh', [x], out, lambda g: (g * (1.0 - out * out),))


_ELEMENTWISE = {
    'sigmoid': sigmoid,
    'tanh': tanh,
    'add': add,
    'mul': mul,
}


def elementwise(op, *args):
    """
        Dispatch a pointwise operation by name.

        Args:
            op (str): One of 'sigmoid', 'tanh', 'add', 'mul'.
            *args (Tensor): One tensor for unary ops, two same-shaped tensors for binary ops.

        Returns:
            Tensor: The pointwise result.
    """
    if op not in _ELEMENTWISE:
        raise ValueError(f'Unknown elementwise op {op!r}, expected one of {sorted(_ELEMENTWISE)}')
    return _ELEMENTWISE[op](*args)


# Masking, pooling, shape manipulation

def _as_mask(mask, shape, op):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise DimensionError(f'{op}: mask shape {mask.shape} does not match {shape}')
    return mask


def masked_softmax(logits, mask):
    """
        Softmax over the last axis restricted to positions where `mask` is true.

        Masked positions are exactly 0. The largest unmasked logit is subtracted first.

        Raises:
            EmptySupportError: If a row has no true mask position.
    """
    mask = _as_mask(mask, logits.shape, 'masked_softmax')
    if not mask.any(axis=-1).all():
        raise EmptySupportError('masked_softmax: a row has no unmasked position')

    shifted = np.where(mask, logits.data, -np.inf)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    exps = np.where(mask, np.exp(shifted), 0.0)
    out = exps / exps.sum(axis=-1, keepdims=True)

    def backward_fn(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return apply_op('masked_softmax', [logits], out, backward_fn)


def softmax(logits):
    return masked_softmax(logits, np.ones(logits.shape, dtype=bool))


def masked_mean(values, mask):
    """
        Average of the rows of `values` [..., n, d] whose `mask` [..., n] entry is true.

        Raises:
            EmptySupportError: If a sequence has no true mask position.
    """
    if values.ndim < 2:
        raise DimensionError(f'masked_mean: expected [..., n, d] values, got {values.shape}')
    mask = _as_mask(mask, values.shape[:-1], 'masked_mean')

    counts = mask.sum(axis=-1)
    if (counts == 0).any():
        raise EmptySupportError('masked_mean: a sequence has no unmasked position')

    weights = mask / counts[..., None]
    out = np.einsum('...n,...nd->...d', weights, values.data)

    def backward_fn(g):
        return (weights[..., :, None] * g[..., None, :],)

    return apply_op('masked_mean', [values], out, backward_fn)


def select_rows(mask, a, b):
    """
        Row-wise choice: rows of `a` where `mask` is true, rows of `b` elsewhere.
        `mask` has the shape of `a` without its last axis.
    """
    _check_same_shape('select_rows', a, b)
    mask = _as_mask(mask, a.shape[:-1], 'select_rows')[..., None]

    return apply_op('select_rows', [a, b], np.where(mask, a.data, b.data),
                    lambda g: (np.where(mask, g, 0.0), np.where(mask, 0.0, g)))


def concat(tensors, axis=-1):
    """
        Concatenate tensors along `axis`; the backward pass splits the gradient back.
    """
    tensors = list(tensors)
    if not tensors:
        raise DimensionError('concat: nothing to concatenate')
    if len(tensors) == 1:
        return tensors[0]

    ndim = tensors[0].ndim
    axis = axis % ndim if ndim else 0
    reference = tensors[0].shape[:axis] + tensors[0].shape[axis + 1:]
    for t in tensors:
        if t.ndim != ndim or t.shape[:axis] + t.shape[axis + 1:] != reference:
            raise DimensionError(f'concat: incompatible shapes {[t.shape for t in tensors]} on axis {axis}')

    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return apply_op('concat', tensors, np.concatenate([t.data for t in tensors], axis=axis), backward_fn)


def stack(tensors, axis=0):
    tensors = list(tensors)
    if not tensors:
        raise DimensionError('stack: nothing to stack')
    for t in tensors:
        _check_same_shape('stack', tensors[0], t)

    out = np.stack([t.data for t in tensors], axis=axis)
    count = len(tensors)

    def backward_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(count))

    return apply_op('stack', tensors, out, backward_fn)


def gather(table, ids):
    """
        Embedding lookup: rows of `table` [V, d] at integer `ids` of any shape.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise DimensionError(f'gather: table must be 2-d, got {table.shape}')
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(f'gather: ids outside [0, {table.shape[0]})')

    table_shape = table.shape

    def backward_fn(g):
        grad = np.zeros(table_shape)
        np.add.at(grad, ids, g)
        return (grad,)

    return apply_op('gather', [table], table.data[ids], backward_fn)


def dropout(x, rate, rng):
    """
        Inverted dropout. Draws its keep mask from `rng`, so it is reproducible for a seed.
    """
    if rate <= 0.0:
        return x

    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return apply_op('dropout', [x], x.data * keep, lambda g: (g * keep,))


def reduce_sum(x):
    shape = x.shape
    return apply_op('reduce_sum', [x], np.asarray(x.data.sum()), lambda g: (np.full(shape, g),))


def reduce_mean(x):
    shape, size = x.shape, x.data.size
    return apply_op('reduce_mean', [x], np.asarray(x.data.mean()), lambda g: (np.full(shape, g / size),))


# Loss

def cross_entropy(probs, labels):
    """
        Negative log-likelihood of class probabilities.

        Probabilities are clamped to [1e-12, 1] before the log. A single distribution [c] takes an
        integer label; a batch [B, c] takes B labels and returns the mean over the batch.

        Args:
            probs (Tensor): [c] or [B, c] distributions.
            labels (int | array-like): Class indices.

        Returns:
            Tensor: A scalar loss.

        Raises:
            LabelIndexError: If a label is outside [0, c).
    """
    single = probs.ndim == 1
    p = probs.data[None, :] if single else probs.data
    if p.ndim != 2:
        raise DimensionError(f'cross_entropy: expected [c] or [B, c] probabilities, got {probs.shape}')

    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    num_classes = p.shape[1]
    if labels.shape != (p.shape[0],):
        raise DimensionError(f'cross_entropy: {labels.shape[0]} labels for {p.shape[0]} distributions')
    if (labels < 0).any() or (labels >= num_classes).any():
        raise LabelIndexError(f'cross_entropy: label outside [0, {num_classes})')

    rows = np.arange(p.shape[0])
    picked = p[rows, labels]
    clamped = np.clip(picked, LOG_EPSILON, 1.0)
    count = p.shape[0]
    out = np.asarray(-np.log(clamped).mean())

    def backward_fn(g):
        grad = np.zeros_like(p)
        # the clamp has zero slope outside [eps, 1]
        inside = (picked >= LOG_EPSILON) & (picked <= 1.0)
        grad[rows, labels] = np.where(inside, -g / (clamped * count), 0.0)
        return (grad[0] if single else grad,)

    return apply_op('cross_entropy', [probs], out, backward_fn)


# Gradient verification

@dataclass
class GradCheckEntry():
    name: str
    size: int
    max_rel_error: float
    passed: bool


@dataclass
class GradCheckReport():
    entries: list
    tol: float

    @property
    def passed(self):
        return all(entry.passed for entry in self.entries)

    def failures(self):
        return [entry for entry in self.entries if not entry.passed]


def relative_error(analytic, numeric):
    # |a - n| / (|a| + |n|), at most 1
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), RELATIVE_ERROR_FLOOR)


def grad_check(f, params, step=1e-5, tol=1e-4):
    """
        Compare analytic gradients with central differences.

        Args:
            f (callable): No-argument function returning a scalar Tensor built from `params`.
                It must be deterministic.
            params (dict[str, Tensor] | list[Tensor]): The tensors to check. Their data is
                perturbed in place and restored.
            step (float): Finite-difference step.
            tol (float): Largest accepted error per parameter.

        Returns:
            GradCheckReport: Per-parameter maximum error and pass/fail.
    """
    if not isinstance(params, dict):
        params = {getattr(p, 'name', None) or f'param{i}': p for i, p in enumerate(params)}

    for tensor in params.values():
        tensor.zero_grad()

    with Tape():
        loss = f()
    backward(loss)

    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data)) for name, t in params.items()}

    entries = []
    for name, tensor in params.items():
        numeric = np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        numeric_flat = numeric.reshape(-1)

        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            plus = f().item()
            flat[i] = original - step
            minus = f().item()
            flat[i] = original
            numeric_flat[i] = (plus - minus) / (2.0 * step)

        error = float(relative_error(analytic[name], numeric).max()) if numeric.size else 0.0
        entries.append(GradCheckEntry(name=name, size=int(numeric.size), max_rel_error=error, passed=error <= tol))

    for tensor in params.values():
        tensor.zero_grad()

    return GradCheckReport(entries=entries, tol=tol)
