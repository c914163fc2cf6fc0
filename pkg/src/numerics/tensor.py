"""
N-dimensional float tensor with tape-based reverse-mode differentiation.

Every op that consumes a tensor with ``requires_grad`` records a ``Node``
(inputs + backward rule) on its output. ``backward`` traces the nodes reachable
from a scalar loss into a ``Tape`` in topological order and runs each backward
rule exactly once. Gradients accumulate into the ``grad`` buffers of leaf
tensors; intermediate gradients are never stored.
"""

import contextlib
import contextvars
import logging
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import settings

logger = logging.getLogger(__name__)

_DEFAULT_DTYPE = contextvars.ContextVar("sanlite_default_dtype", default=np.dtype(np.float32))
_GRAD_ENABLED = contextvars.ContextVar("sanlite_grad_enabled", default=True)


class ShapeError(ValueError):
    """Raised when tensor shapes are incompatible with an op."""


class NonFiniteError(FloatingPointError):
    """Raised when an op produces NaN or Inf."""


def get_default_dtype() -> np.dtype:
    return _DEFAULT_DTYPE.get()


@contextlib.contextmanager
def default_dtype(dtype) -> Iterator[None]:
    """Temporarily change the dtype new tensors are created with (float32 or float64)."""
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"Unsupported tensor dtype {dtype}; use float32 or float64")
    token = _DEFAULT_DTYPE.set(dtype)
    try:
        yield
    finally:
        _DEFAULT_DTYPE.reset(token)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable node recording, e.g. for inference and finite differences."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
Operand = Union["Tensor", float, int, np.ndarray]


@dataclass(eq=False)
class Node:
    """One recorded op: its inputs and the rule mapping output grad to input grads."""

    name: str
    inputs: Tuple["Tensor", ...]
    backward: BackwardRule


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.array(data, dtype=dtype or get_default_dtype(), copy=True)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._node: Optional[Node] = None

    @classmethod
    def from_op(
        cls, data: np.ndarray, inputs: Sequence["Tensor"], backward: BackwardRule, name: str
    ) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.asarray(data)
        out.grad = None
        out.requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        out._node = Node(name, tuple(inputs), backward) if out.requires_grad else None
        if settings.CHECK_FINITE and not np.all(np.isfinite(out.data)):
            raise NonFiniteError(f"{name} produced non-finite values (shape {out.data.shape})")
        return out

    # ------------------------------------------------------------------ basics

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.requires_grad = False
        out.grad = None
        out._node = None
        return out

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # ------------------------------------------------------------- arithmetic

    def _lift(self, other: Operand) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(other, dtype=self.dtype)

    def __add__(self, other: Operand) -> "Tensor":
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape

        def _backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor.from_op(self.data + other.data, (self, other), _backward, "add")

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor.from_op(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other: Operand) -> "Tensor":
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape

        def _backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)

        return Tensor.from_op(self.data - other.data, (self, other), _backward, "sub")

    def __rsub__(self, other: Operand) -> "Tensor":
        return self._lift(other) - self

    def __mul__(self, other: Operand) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data

        def _backward(g):
            return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

        return Tensor.from_op(a * b, (self, other), _backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data

        def _backward(g):
            return _unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)

        return Tensor.from_op(a / b, (self, other), _backward, "div")

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise TypeError("Tensor exponents are not supported; use a Python number")
        a = self.data

        def _backward(g):
            return (g * exponent * a ** (exponent - 1),)

        return Tensor.from_op(a**exponent, (self,), _backward, "pow")

    def abs(self) -> "Tensor":
        a = self.data
        return Tensor.from_op(np.abs(a), (self,), lambda g: (g * np.sign(a),), "abs")

    # ------------------------------------------------------------- reductions

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        shape = self.shape

        def _backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor.from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), _backward, "sum")

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        return Tensor.from_op(
            self.data.reshape(shape), (self,), lambda g: (g.reshape(original),), "reshape"
        )


class Tape:
    """Op nodes reachable from a root tensor, in topological order (inputs first)."""

    def __init__(self, order: List[Tensor]):
        self.order = order

    @property
    def nodes(self) -> List[Node]:
        return [t._node for t in self.order]

    def __len__(self) -> int:
        return len(self.order)

    @classmethod
    def trace(cls, root: Tensor) -> "Tape":
        order: List[Tensor] = []
        visited = set()
        stack = [(root, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if tensor._node is None or id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            for parent in reversed(tensor._node.inputs):
                if parent._node is not None and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def run(self, root: Tensor, seed_grad: np.ndarray) -> None:
        pending = {id(root): seed_grad}
        for tensor in reversed(self.order):
            grad_out = pending.pop(id(tensor), None)
            if grad_out is None:
                continue
            node = tensor._node
            for parent, grad_in in zip(node.inputs, node.backward(grad_out)):
                if grad_in is None or not parent.requires_grad:
                    continue
                if grad_in.shape != parent.shape:
                    raise ShapeError(
                        f"{node.name} backward produced grad {grad_in.shape} for input {parent.shape}"
                    )
                if parent._node is None:
                    _accumulate(parent, grad_in)
                elif id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + grad_in
                else:
                    pending[id(parent)] = grad_in


def _accumulate(leaf: Tensor, grad: np.ndarray) -> None:
    if leaf.grad is None:
        leaf.grad = np.array(grad, dtype=leaf.dtype, copy=True)
    else:
        leaf.grad += grad


def backward(loss: Tensor) -> None:
    """Populate grads on every requires_grad leaf reachable from a scalar loss."""
    if loss.data.size != 1:
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
    seed = np.ones_like(loss.data)
    if loss._node is None:
        if loss.requires_grad:
            _accumulate(loss, seed)
        return
    Tape.trace(loss).run(loss, seed)
