"""Enums shared across modules, serialized by member name in JSON and CSV."""
from __future__ import annotations

from enum import Enum
from typing import Any, Callable, Dict, Generator, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from .errors import RetainContractError

CallableGenerator = Generator[Callable[..., Any], None, None]

E = TypeVar("E", bound="NamedEnum")


class NamedEnum(Enum):
    """Enum accepted by pydantic either as a member or as a member name."""

    @classmethod
    def __get_validators__(cls) -> CallableGenerator:
        yield cls.validate

    @classmethod
    def __modify_schema__(cls, field_schema: Dict[str, str]) -> None:
        field_schema.update(type="str")  # pragma: no cover

    @classmethod
    def validate(cls: Type[E], value: Union[str, E]) -> E:
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls.__members__[value]
            except KeyError as e:
                raise ValueError(f"{value!r} is not a valid {cls.__name__}") from e
        raise TypeError(f"string or {cls.__name__} required")  # pragma: no cover

    @staticmethod
    def to_str(value: NamedEnum) -> str:
        return value.name


class Signal(NamedEnum):
    # column order of every H×r input matrix
    glucose = 0
    insulin = 1
    cho = 2


SIGNALS = tuple(Signal)


class Event(NamedEnum):
    insulin = 1
    cho = 2

    @property
    def signal(self) -> Signal:
        return Signal(self.value)


class Family(NamedEnum):
    retain = 0
    lstm = 1


class Precision(NamedEnum):
    double = 64
    single = 32

    @property
    def dtype(self) -> Any:
        return np.float64 if self == Precision.double else np.float32


M = TypeVar("M", bound=BaseModel)


def validated(model: Type[M], **values: Any) -> M:
    """Build a pydantic model, raising a contract error on invalid values."""
    try:
        return model(**values)
    except ValidationError as e:
        raise RetainContractError(f"{model.__name__}: {e}") from e
