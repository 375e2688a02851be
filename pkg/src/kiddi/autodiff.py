"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every operation records its parents and a closure that pushes the output
gradient back to them. ``Tensor.backward`` walks the recorded graph in
reverse topological order. Only the handful of operations the diagnosis
model needs are provided; all arithmetic is float64.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

LOG_CLAMP = 1e-12


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")
    # make numpy defer to our reflected operators
    __array_ufunc__ = None

    def __init__(
        self,
        data,
        parents: Sequence["Tensor"] = (),
        backward: Callable[[np.ndarray], None] | None = None,
        requires_grad: bool = False,
        name: str | None = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents = tuple(parents)
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in self._parents)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{label})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True).reshape(self.data.shape)
        else:
            self.grad += g

    def backward(self, grad: np.ndarray | float | None = None) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every leaf requiring grad."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = _topological_order(self)
        # intermediate grads are scratch space; leaves keep theirs
        for node in order:
            if node._parents:
                node.grad = None
        self._accumulate(np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(as_tensor(other), self)

    def __getitem__(self, index):
        return take(self, index)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return reshape(self, shape)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64, copy=True), requires_grad=True, name=name)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, (a, b))

    def _backward(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out._backward = _backward
    return out


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data, (a,))
    out._backward = lambda g: a._accumulate(-g)
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, (a, b))

    def _backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    out._backward = _backward
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data, (a, b))

    def _backward(g):
        A, B = a.data, b.data
        if a.requires_grad:
            if B.ndim == 1:
                ga = np.multiply.outer(g, B)
            elif A.ndim == 1:
                ga = B @ g
            else:
                ga = g @ B.T
            a._accumulate(ga)
        if b.requires_grad:
            if A.ndim == 1:
                gb = np.multiply.outer(A, g)
            elif B.ndim == 1:
                gb = A.T @ g
            else:
                gb = A.T @ g
            b._accumulate(gb)

    out._backward = _backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T, (a,))
    out._backward = lambda g: a._accumulate(g.T)
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape), (a,))
    out._backward = lambda g: a._accumulate(g.reshape(a.data.shape))
    return out


def take(a: Tensor, index) -> Tensor:
    out = Tensor(a.data[index], (a,))

    def _backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        a._accumulate(full)

    out._backward = _backward
    return out


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), tensors)
    bounds = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            t._accumulate(piece)

    out._backward = _backward
    return out


def tensor_sum(a: Tensor) -> Tensor:
    out = Tensor(a.data.sum(), (a,))
    out._backward = lambda g: a._accumulate(np.broadcast_to(g, a.data.shape))
    return out


def mean(a: Tensor, axis: int = 0) -> Tensor:
    n = a.data.shape[axis]
    out = Tensor(a.data.mean(axis=axis), (a,))
    out._backward = lambda g: a._accumulate(
        np.broadcast_to(np.expand_dims(g, axis) / n, a.data.shape)
    )
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y, (a,))
    out._backward = lambda g: a._accumulate(g * (1.0 - y * y))
    return out


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    slope_mask = np.where(a.data > 0, 1.0, slope)
    out = Tensor(a.data * slope_mask, (a,))
    out._backward = lambda g: a._accumulate(g * slope_mask)
    return out


def softmax(a: Tensor) -> Tensor:
    """Softmax along the last axis."""
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(p, (a,))
    out._backward = lambda g: a._accumulate(p * (g - (g * p).sum(axis=-1, keepdims=True)))
    return out


def masked_softmax(a: Tensor, mask: np.ndarray) -> Tensor:
    """Row-wise softmax restricted to ``mask``; masked-out entries are exactly 0.

    Every row must have at least one unmasked entry.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ValueError("masked_softmax: a row has no admissible entries")
    z = np.where(mask, a.data, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(z), 0.0)
    p = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(p, (a,))
    out._backward = lambda g: a._accumulate(p * (g - (g * p).sum(axis=-1, keepdims=True)))
    return out


def nll(probs: Tensor, target: int, clamp: float = LOG_CLAMP) -> Tensor:
    """-log(max(p[target], clamp)); zero gradient inside the clamped region."""
    p = probs.data[target]
    out = Tensor(-np.log(max(p, clamp)), (probs,))

    def _backward(g):
        full = np.zeros_like(probs.data)
        if p > clamp:
            full[target] = -g / p
        probs._accumulate(full)

    out._backward = _backward
    return out
