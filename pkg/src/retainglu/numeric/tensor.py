"""Immutable dense tensors backed by numpy, with differentiable primitives.

Every primitive computes its value eagerly. When a gradient tape is active and
at least one operand requires gradients, the primitive records a node holding
its vector-Jacobian product on that tape.
"""
from __future__ import annotations

from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import (
    RetainNumericError,
    RetainShapeError,
    assert_eq,
    assert_ge,
    assert_in,
)
from .tape import Node, VectorJacobian, active_tape

Operand = Union["Tensor", float, int, np.ndarray]
Shape = Tuple[int, ...]

DEFAULT_DTYPE = np.float64


class Tensor:
    __slots__ = ("data", "requires_grad")

    def __init__(
        self, data: Any, requires_grad: bool = False, dtype: Optional[Any] = None
    ) -> None:
        if dtype is None:
            dtype = getattr(data, "dtype", None)
            if dtype is None or not np.issubdtype(dtype, np.floating):
                dtype = DEFAULT_DTYPE
        array = np.array(data, dtype=dtype, copy=True)
        self.data = _finite(array, "tensor")
        self.requires_grad = requires_grad

    @classmethod
    def wrap(cls, array: np.ndarray, requires_grad: bool = False) -> Tensor:
        """Take ownership of a freshly computed array without copying it."""
        tensor = cls.__new__(cls)
        tensor.data = _finite(array, "tensor")
        tensor.requires_grad = requires_grad
        return tensor

    @property
    def shape(self) -> Shape:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def dtype(self) -> Any:
        return self.data.dtype

    @property
    def T(self) -> Tensor:  # pylint: disable=invalid-name
        return transpose(self)

    def item(self) -> float:
        assert_eq("item size", 1, self.data.size, "item", RetainShapeError)
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> Tensor:
        return Tensor.wrap(self.data)

    def reshape(self, *shape: int) -> Tensor:
        return reshape(self, shape)

    def sum(self, axis: Optional[int] = None) -> Tensor:
        return tensor_sum(self, axis)

    def mean(self) -> Tensor:
        return mean(self)

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{grad})"

    def __add__(self, other: Operand) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Operand) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Operand) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Operand) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Operand) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Operand) -> Tensor:
        return mul(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, key: Any) -> Tensor:
        return getitem(self, key)


def _finite(array: np.ndarray, name: str) -> np.ndarray:
    # 0-d results come back from numpy as scalars
    array = np.asarray(array)
    if not np.all(np.isfinite(array)):
        raise RetainNumericError(f"{name}: non-finite value in result of shape {array.shape}")
    array.flags.writeable = False
    return array


def as_tensor(value: Operand) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _emit(
    op: str, inputs: Sequence[Tensor], value: np.ndarray, vjp: VectorJacobian
) -> Tensor:
    value = _finite(value, op)
    tape = active_tape()
    requires_grad = tape is not None and any(t.requires_grad for t in inputs)
    output = Tensor.wrap(value, requires_grad)
    if requires_grad:
        assert tape is not None
        tape.record(Node(op, tuple(inputs), output, vjp))
    return output


def _unbroadcast(grad: np.ndarray, shape: Shape) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Shape:
    try:
        return tuple(np.broadcast(a.data, b.data).shape)
    except ValueError:
        raise RetainShapeError(f"{op}: shapes {a.shape} and {b.shape} differ") from None


# --- linear algebra ---


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a[..., k] @ b[k, n] -> [..., n]``; leading axes of ``a`` are a batch."""
    assert_eq("matmul right operand rank", 2, b.ndim, "matmul", RetainShapeError)
    assert_ge("matmul left operand rank", 1, a.ndim, "matmul", RetainShapeError)
    k, n = b.shape
    assert_eq("matmul inner dimension", k, a.shape[-1], "matmul", RetainShapeError)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        grad_a = grad @ b.data.T
        grad_b = a.data.reshape(-1, k).T @ grad.reshape(-1, n)
        return grad_a, grad_b

    return _emit("matmul", (a, b), a.data @ b.data, vjp)


def transpose(a: Tensor) -> Tensor:
    assert_eq("transpose rank", 2, a.ndim, "transpose", RetainShapeError)
    return _emit("transpose", (a,), a.data.T.copy(), lambda grad: (grad.T,))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        value = a.data.reshape(tuple(shape)).copy()
    except ValueError:
        raise RetainShapeError(f"reshape: {a.shape} to {tuple(shape)}") from None
    return _emit("reshape", (a,), value, lambda grad: (grad.reshape(a.shape),))


def _is_basic(key: Any) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(part, (int, slice)) or part is Ellipsis for part in parts)


def getitem(a: Tensor, key: Any) -> Tensor:
    basic = _is_basic(key)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros(a.shape, dtype=grad.dtype)
        if basic:
            # basic indexing never selects an element twice
            full[key] = grad
        else:
            np.add.at(full, key, grad)
        return (full,)

    return _emit("getitem", (a,), np.array(a.data[key]), vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    assert_ge("stack count", 1, len(tensors), "stack", RetainShapeError)
    shapes = {t.shape for t in tensors}
    assert_eq("stack shapes", 1, len(shapes), "stack", RetainShapeError)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(np.take(grad, i, axis=axis) for i in range(len(tensors)))

    return _emit("stack", tensors, np.stack([t.data for t in tensors], axis), vjp)


def tensor_sum(a: Tensor, axis: Optional[int] = None) -> Tensor:
    def vjp(grad: np.ndarray) -> Tuple[np.ndarray]:
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, a.shape).copy(),)

    return _emit("sum", (a,), np.asarray(a.data.sum(axis=axis)), vjp)


def mean(a: Tensor) -> Tensor:
    assert_ge("mean size", 1, a.data.size, "mean", RetainShapeError)
    return tensor_sum(a) * (1.0 / a.data.size)


# --- elementwise ---


def add(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", ta, tb)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(grad, ta.shape), _unbroadcast(grad, tb.shape)

    return _emit("add", (ta, tb), ta.data + tb.data, vjp)


def sub(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", ta, tb)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(grad, ta.shape), _unbroadcast(-grad, tb.shape)

    return _emit("sub", (ta, tb), ta.data - tb.data, vjp)


def mul(a: Operand, b: Operand) -> Tensor:
    """Hadamard product."""
    ta, tb = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", ta, tb)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            _unbroadcast(grad * tb.data, ta.shape),
            _unbroadcast(grad * ta.data, tb.shape),
        )

    return _emit("mul", (ta, tb), ta.data * tb.data, vjp)


def neg(a: Tensor) -> Tensor:
    return _emit("neg", (a,), -a.data, lambda grad: (-grad,))


def tanh(a: Tensor) -> Tensor:
    value = np.tanh(a.data)
    return _emit("tanh", (a,), value, lambda grad: (grad * (1.0 - value * value),))


def sigmoid(a: Tensor) -> Tensor:
    # tanh form never overflows
    value = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _emit("sigmoid", (a,), value, lambda grad: (grad * value * (1.0 - value),))


def softmax(v: Tensor, axis: int = -1) -> Tensor:
    assert_ge("softmax rank", 1, v.ndim, "softmax", RetainShapeError)
    assert_ge("softmax length", 1, v.shape[axis], "softmax", RetainShapeError)
    shifted = v.data - v.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    value = exp / exp.sum(axis=axis, keepdims=True)

    def vjp(grad: np.ndarray) -> Tuple[np.ndarray]:
        inner = (grad * value).sum(axis=axis, keepdims=True)
        return (value * (grad - inner),)

    return _emit("softmax", (v,), value, vjp)


ELEMENTWISE: Dict[str, Callable[..., Tensor]] = {
    "add": add,
    "mul": mul,
    "sub": sub,
    "tanh": tanh,
    "sigmoid": sigmoid,
}


def elementwise(op: str, *operands: Operand) -> Tensor:
    assert_in("elementwise op", ELEMENTWISE, op, "elementwise")
    func: Callable[..., Tensor] = ELEMENTWISE[op]
    if op in ("tanh", "sigmoid"):
        assert_eq("unary operand count", 1, len(operands), op)
        return func(as_tensor(operands[0]))
    assert_eq("binary operand count", 2, len(operands), op)
    a, b = as_tensor(operands[0]), as_tensor(operands[1])
    if a.shape != b.shape:
        raise RetainShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")
    return func(a, b)
