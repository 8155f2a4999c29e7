"""Dense primitives and a reverse-mode tape over float64 numpy arrays.

Matrices are C-contiguous ``float64`` ndarrays. Eager functions
(:func:`matmul`, :func:`tanh_forward`, :func:`softmax`, :func:`cross_entropy`)
work on plain arrays. :class:`Tape` records the same operations on
:class:`Var` nodes so that :func:`backward` can replay them in reverse.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ContractError

PROB_FLOOR = 1e-12


def as_matrix(x) -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ContractError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
    return a @ b


def tanh_forward(x) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=np.float64))


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with max subtraction. Accepts a vector or a matrix."""
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[-1] < 2:
        raise ContractError("softmax needs at least two classes")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(dist, target: int) -> float:
    p = np.asarray(dist, dtype=np.float64)
    if not 0 <= target < p.shape[-1]:
        raise ContractError(f"target {target} out of range for {p.shape[-1]} classes")
    return float(-np.log(max(p[target], PROB_FLOOR)))


class Var:
    """A value recorded on a tape."""

    __slots__ = ("value", "tape", "grad", "name")

    def __init__(self, value: np.ndarray, tape: "Tape", name: str | None = None):
        self.value = value
        self.tape = tape
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Var(shape={self.value.shape}, name={self.name!r})"


class Tape:
    """Records primitive operations for one forward pass.

    Parameters enter through :meth:`param` and are keyed by name; the
    gradient buffer of each parameter has the parameter's shape.
    """

    def __init__(self):
        self.ops: list[tuple[Var, object]] = []
        self.params: dict[str, Var] = {}
        self._ids: set[int] = set()

    def _new(self, value, backward_fn=None, name=None) -> Var:
        v = Var(value, self, name)
        self._ids.add(id(v))
        if backward_fn is not None:
            self.ops.append((v, backward_fn))
        return v

    def _own(self, x: Var) -> Var:
        if not isinstance(x, Var) or x.tape is not self:
            raise ContractError("operand does not belong to this tape")
        return x

    def param(self, name: str, value: np.ndarray) -> Var:
        if name in self.params:
            return self.params[name]
        v = self._new(value, name=name)
        self.params[name] = v
        return v

    def constant(self, value) -> Var:
        return self._new(np.asarray(value, dtype=np.float64))

    # -- primitives ---------------------------------------------------------

    def matmul(self, a: Var, b: Var) -> Var:
        a, b = self._own(a), self._own(b)
        out_value = matmul(a.value, b.value)

        def back(g):
            a._accumulate(g @ b.value.T)
            b._accumulate(a.value.T @ g)

        return self._new(out_value, back)

    def add_bias(self, x: Var, bias: Var) -> Var:
        x, bias = self._own(x), self._own(bias)
        if bias.value.shape != (x.value.shape[1],):
            raise ContractError(f"bias shape {bias.value.shape} does not fit {x.value.shape}")

        def back(g):
            x._accumulate(g)
            bias._accumulate(g.sum(axis=0))

        return self._new(x.value + bias.value, back)

    def add(self, a: Var, b: Var) -> Var:
        a, b = self._own(a), self._own(b)
        if a.value.shape != b.value.shape:
            raise ContractError(f"add: shape mismatch {a.value.shape} vs {b.value.shape}")

        def back(g):
            a._accumulate(g)
            b._accumulate(g)

        return self._new(a.value + b.value, back)

    def tanh(self, x: Var) -> Var:
        x = self._own(x)
        y = np.tanh(x.value)

        def back(g):
            x._accumulate(g * (1.0 - y * y))

        return self._new(y, back)

    def concat(self, parts: list[Var]) -> Var:
        parts = [self._own(p) for p in parts]
        if not parts:
            raise ContractError("concat of nothing")
        widths = [p.value.shape[1] for p in parts]
        value = np.concatenate([p.value for p in parts], axis=1)

        def back(g):
            off = 0
            for p, w in zip(parts, widths):
                p._accumulate(g[:, off:off + w])
                off += w

        return self._new(value, back)

    def gather(self, table: Var, idx: np.ndarray) -> Var:
        """Rows ``table[idx]``; the backward pass scatter-adds into the table."""
        table = self._own(table)
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        vocab = table.value.shape[0]
        if idx.size and (idx.min() < 0 or idx.max() >= vocab):
            raise ContractError(f"embedding index out of range for vocabulary of {vocab}")

        def back(g):
            buf = np.zeros_like(table.value)
            kernels.scatter_add_rows(buf, idx, np.ascontiguousarray(g))
            table._accumulate(buf)

        return self._new(table.value[idx], back)

    def softmax(self, logits: Var) -> Var:
        logits = self._own(logits)
        p = softmax(logits.value)

        def back(g):
            inner = np.sum(g * p, axis=1, keepdims=True)
            logits._accumulate(p * (g - inner))

        return self._new(p, back)

    def cross_entropy(self, probs: Var, targets: np.ndarray) -> Var:
        """Per-row ``-ln(max(p[target], floor))`` as an ``(n,)`` vector."""
        probs = self._own(probs)
        targets = np.asarray(targets, dtype=np.int64)
        n, k = probs.value.shape
        if targets.shape != (n,) or (n and (targets.min() < 0 or targets.max() >= k)):
            raise ContractError("cross_entropy: targets out of range or misaligned")
        rows = np.arange(n)
        pt = probs.value[rows, targets]
        clipped = pt <= PROB_FLOOR
        loss = -np.log(np.maximum(pt, PROB_FLOOR))

        def back(g):
            dp = np.zeros_like(probs.value)
            dp[rows, targets] = np.where(clipped, 0.0, -g / np.where(clipped, 1.0, pt))
            probs._accumulate(dp)

        return self._new(loss, back)

    def mean(self, x: Var) -> Var:
        x = self._own(x)
        n = x.value.size

        def back(g):
            x._accumulate(np.full_like(x.value, g / n))

        return self._new(np.asarray(x.value.mean()), back)

    def sum_squares(self, x: Var) -> Var:
        x = self._own(x)

        def back(g):
            x._accumulate(2.0 * g * x.value)

        return self._new(np.asarray(np.sum(x.value * x.value)), back)

    def scale(self, x: Var, c: float) -> Var:
        x = self._own(x)

        def back(g):
            x._accumulate(g * c)

        return self._new(x.value * c, back)


def backward(tape: Tape, loss: Var) -> dict[str, np.ndarray]:
    """Gradients of the scalar ``loss`` for every parameter on ``tape``.

    Parameters the loss does not reach get zero gradients.
    """
    if not isinstance(loss, Var) or loss.tape is not tape or id(loss) not in tape._ids:
        raise ContractError("loss is not a node of this tape")
    if loss.value.size != 1:
        raise ContractError("backward needs a scalar loss")
    for v, _ in tape.ops:
        v.grad = None
    for p in tape.params.values():
        p.grad = None
    loss.grad = np.ones_like(loss.value)
    for out, fn in reversed(tape.ops):
        if out.grad is not None:
            fn(out.grad)
    return {
        name: (p.grad if p.grad is not None else np.zeros_like(p.value))
        for name, p in tape.params.items()
    }
