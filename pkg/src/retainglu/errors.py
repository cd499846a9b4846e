from typing import Any, Container, Type, Union


class RetainError(Exception):
    """Base error for all errors in the library."""


class RetainContractError(RetainError):
    """A precondition of an operation was violated."""


class RetainConfigError(RetainContractError):
    """A configuration value or file could not be resolved."""


class RetainShapeError(RetainError):
    """Operand shapes are inconsistent."""


class RetainNumericError(RetainError):
    """A computation produced a non-finite value."""


class RetainFormatError(RetainError):
    """An error when reading a file (CSV, weights, config)."""


class RetainConsistencyError(RetainError):
    """Two artifacts that must agree (e.g. a trace and its parameters) do not."""


class RetainDomainError(RetainError):
    """A metric is undefined for its input."""


Location = Union[int, str]


def _assert_base(  # pylint: disable=too-many-arguments
    result: bool,
    operator: str,
    name: str,
    expected: Any,
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    if not result:
        raise error_class(f"{name}: {actual!r} {operator} {expected!r} (at {location})")


def assert_eq(
    name: str,
    expected: Any,
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    result = bool(actual == expected)
    _assert_base(result, "==", name, expected, actual, location, error_class)


def assert_lt(
    name: str,
    expected: Any,
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    result = actual < expected
    _assert_base(result, "<", name, expected, actual, location, error_class)


def assert_gt(
    name: str,
    expected: Any,
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    result = actual > expected
    _assert_base(result, ">", name, expected, actual, location, error_class)


def assert_ge(
    name: str,
    expected: Any,
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    result = actual >= expected
    _assert_base(result, ">=", name, expected, actual, location, error_class)


def assert_in(
    name: str,
    expected: Container[Any],
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    result = actual in expected
    _assert_base(result, "in", name, expected, actual, location, error_class)


def assert_between(  # pylint: disable=too-many-arguments
    name: str,
    expected_low: Any,
    expected_high: Any,
    actual: Any,
    location: Location,
    error_class: Type[RetainError] = RetainContractError,
) -> None:
    if expected_low > actual or actual > expected_high:
        raise error_class(
            f"{name}: {expected_low!r} <= {actual!r} <= {expected_high!r} (at {location})"
        )
