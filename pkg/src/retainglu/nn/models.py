from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass, replace
from typing import Any, Iterator, List, Sequence, Tuple, TypeVar, Union

import numpy as np
from pydantic import BaseModel, validator

from ..errors import RetainShapeError, assert_eq
from ..numeric import Tensor


class ModelDimensions(BaseModel):
    """Sizes shared by both model families.

    ``inputs`` is r (glucose, insulin, CHO), ``history`` is H steps of 5 min,
    ``horizon`` is PH steps, ``embedding`` is m and ``hidden`` is p. The
    baseline stacks ``layers`` LSTM layers of ``hidden`` units.
    """

    inputs: int = 3
    history: int = 36
    horizon: int = 6
    embedding: int = 64
    hidden: int = 128
    layers: int = 2

    @validator("*")
    @classmethod
    def validate_positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be strictly positive")
        return value


@dataclass(frozen=True)
class LstmParameters:
    """Gate order of W, U and b rows: input, forget, candidate, output."""

    W: Tensor
    U: Tensor
    b: Tensor

    def __post_init__(self) -> None:
        rows, _ = self.W.shape
        hidden = rows // 4
        assert_eq("LSTM W rows", 4 * hidden, rows, "W", RetainShapeError)
        assert_eq("LSTM U shape", (rows, hidden), self.U.shape, "U", RetainShapeError)
        assert_eq("LSTM b shape", (rows,), self.b.shape, "b", RetainShapeError)

    @property
    def hidden_size(self) -> int:
        return self.U.shape[1]

    @property
    def input_size(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class LstmState:
    h: Tensor
    c: Tensor


@dataclass(frozen=True)
class RetainParameters:
    W_emb: Tensor  # m×r
    rnn_alpha: LstmParameters  # d=m, h=p
    w_alpha: Tensor  # p
    b_alpha: Tensor  # scalar
    rnn_beta: LstmParameters  # d=m, h=p
    W_beta: Tensor  # m×p
    b_beta: Tensor  # m
    W: Tensor  # 1×m
    b: Tensor  # scalar

    def __post_init__(self) -> None:
        m, _ = self.W_emb.shape
        p = self.rnn_alpha.hidden_size
        assert_eq("alpha RNN input", m, self.rnn_alpha.input_size, "rnn_alpha", RetainShapeError)
        assert_eq("beta RNN input", m, self.rnn_beta.input_size, "rnn_beta", RetainShapeError)
        assert_eq("w_alpha shape", (p,), self.w_alpha.shape, "w_alpha", RetainShapeError)
        assert_eq("b_alpha shape", (), self.b_alpha.shape, "b_alpha", RetainShapeError)
        assert_eq(
            "W_beta shape",
            (m, self.rnn_beta.hidden_size),
            self.W_beta.shape,
            "W_beta",
            RetainShapeError,
        )
        assert_eq("b_beta shape", (m,), self.b_beta.shape, "b_beta", RetainShapeError)
        assert_eq("W shape", (1, m), self.W.shape, "W", RetainShapeError)
        assert_eq("b shape", (), self.b.shape, "b", RetainShapeError)


@dataclass(frozen=True)
class BaselineParameters:
    W_emb: Tensor  # m×r
    b_emb: Tensor  # m
    layers: Tuple[LstmParameters, ...]
    W: Tensor  # 1×p
    b: Tensor  # scalar

    def __post_init__(self) -> None:
        m, _ = self.W_emb.shape
        assert_eq("b_emb shape", (m,), self.b_emb.shape, "b_emb", RetainShapeError)
        size = m
        for i, layer in enumerate(self.layers):
            assert_eq("layer input", size, layer.input_size, f"layer {i}", RetainShapeError)
            size = layer.hidden_size
        assert_eq("W shape", (1, size), self.W.shape, "W", RetainShapeError)
        assert_eq("b shape", (), self.b.shape, "b", RetainShapeError)


@dataclass(frozen=True)
class ForwardTrace:
    """Everything one RETAIN prediction computed, kept for interpretation."""

    embeddings: np.ndarray  # H×m
    alphas: np.ndarray  # H
    betas: np.ndarray  # H×m
    context: np.ndarray  # m
    prediction: float


Parameters = Union[RetainParameters, BaselineParameters]
P = TypeVar("P", RetainParameters, BaselineParameters, LstmParameters)


def _walk(prefix: str, value: Any) -> Iterator[Tuple[str, Tensor]]:
    if isinstance(value, Tensor):
        yield prefix, value
    elif is_dataclass(value):
        for field in fields(value):
            yield from _walk(f"{prefix}{field.name}.", getattr(value, field.name))
    elif isinstance(value, tuple):
        for i, item in enumerate(value):
            yield from _walk(f"{prefix}{i}.", item)
    else:  # pragma: no cover
        raise TypeError(f"unexpected parameter member {type(value)}")


def named_tensors(params: Any) -> List[Tuple[str, Tensor]]:
    """All tensors of a parameter set in declared (field) order."""
    return [(name.rstrip("."), tensor) for name, tensor in _walk("", params)]


def tensors(params: Any) -> List[Tensor]:
    return [tensor for _, tensor in _walk("", params)]


def _rebuild(value: Any, arrays: Iterator[Union[np.ndarray, Tensor]], dtype: Any) -> Any:
    if isinstance(value, Tensor):
        array = next(arrays)
        assert_eq("parameter shape", value.shape, tuple(array.shape), "rebuild", RetainShapeError)
        if isinstance(array, Tensor):
            return array
        return Tensor(array, requires_grad=True, dtype=dtype)
    if is_dataclass(value):
        changes = {
            field.name: _rebuild(getattr(value, field.name), arrays, dtype)
            for field in fields(value)
        }
        return replace(value, **changes)
    if isinstance(value, tuple):
        return tuple(_rebuild(item, arrays, dtype) for item in value)
    raise TypeError(f"unexpected parameter member {type(value)}")  # pragma: no cover


def with_arrays(params: P, arrays: List[np.ndarray], dtype: Any = None) -> P:
    """Return a parameter set of the same structure holding ``arrays``."""
    expected = len(tensors(params))
    assert_eq("parameter count", expected, len(arrays), "rebuild", RetainShapeError)
    rebuilt: P = _rebuild(params, iter(arrays), dtype)
    return rebuilt


def with_tensors(params: P, sources: Sequence[Tensor]) -> P:
    """Like :func:`with_arrays`, but holding ``sources`` themselves so that
    gradients recorded through the result reach them."""
    expected = len(tensors(params))
    assert_eq("parameter count", expected, len(sources), "rebuild", RetainShapeError)
    rebuilt: P = _rebuild(params, iter(sources), None)
    return rebuilt


def cast(params: P, dtype: Any) -> P:
    return with_arrays(params, [t.data for t in tensors(params)], dtype)
