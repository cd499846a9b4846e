"""Run configuration: defaults, then a ``key = value`` file, then flags.

Every key of the file has a ``--key-name`` flag twin. Blank lines and ``#``
comments are ignored, list values are comma-separated, and unknown keys are
an error. The resolved configuration is echoed into the run directory in the
same format with sorted keys.
"""
import logging
from argparse import SUPPRESS, ArgumentParser, Namespace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ValidationError, validator

from ..errors import RetainConfigError
from ..nn import ModelDimensions
from ..serde import Family, Precision
from ..synthetic import SimConfig
from ..train import TrainConfig

CONFIG_ECHO = "config.txt"
LIST_KEYS = ("meal_hours", "meal_cho")

LOG = logging.getLogger(__name__)


class RunConfig(BaseModel):  # pylint: disable=too-few-public-methods
    # paths and protocol
    data_dir: Optional[Path] = None
    output_dir: Path = Path("runs")
    run_name: Optional[str] = None
    weights: Optional[Path] = None
    model: Family = Family.retain
    test_patient: Optional[str] = None
    oracle: bool = False
    audit: bool = False
    grid: Optional[str] = None
    inner_folds: int = 4
    train_fraction: float = 0.75
    period: int = 5
    max_gap: int = 30
    max_shift: Optional[int] = None
    no_event_window: int = 12
    threshold: float = 0.05
    patients: int = 5

    # model dimensions
    inputs: int = 3
    history: int = 36
    horizon: int = 6
    embedding: int = 64
    hidden: int = 128
    layers: int = 2

    # training
    learning_rate: float = 1e-3
    batch_size: int = 50
    patience: int = 25
    max_epochs: int = 500
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    precision: Precision = Precision.double

    # simulation
    days: int = 31
    basal: float = 120.0
    meal_hours: List[float] = [7.5, 12.5, 19.0]
    meal_cho: List[float] = [50.0, 70.0, 60.0]
    meal_cho_std: float = 10.0
    meal_jitter: float = 30.0
    cho_gain: float = 2.0
    cho_tau: float = 45.0
    insulin_gain: float = 15.0
    insulin_tau: float = 80.0
    carb_ratio: float = 10.0
    noise_std: float = 2.0
    floor: float = 40.0

    class Config:
        extra = "forbid"

    @validator(*LIST_KEYS, pre=True)
    @classmethod
    def split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @validator("patients", "inner_folds", "period", "max_gap", "no_event_window")
    @classmethod
    def validate_positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be strictly positive")
        return value

    def _subset(self, model: Any) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in model.__fields__}

    def dims(self) -> ModelDimensions:
        return _build(ModelDimensions, self._subset(ModelDimensions))

    def train_config(self) -> TrainConfig:
        return _build(TrainConfig, self._subset(TrainConfig))

    def sim_config(self) -> SimConfig:
        return _build(SimConfig, self._subset(SimConfig))

    @property
    def shift(self) -> int:
        return self.horizon if self.max_shift is None else self.max_shift


def _build(model: Any, values: Dict[str, Any]) -> Any:
    try:
        return model(**values)
    except ValidationError as e:
        raise RetainConfigError(f"{model.__name__}: {e}") from e


def parse_config_text(text: str, location: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise RetainConfigError(f"config line: {line!r} is not key = value (at {location}:{number})")
        if key not in RunConfig.__fields__:
            raise RetainConfigError(f"config key: {key!r} is unknown (at {location}:{number})")
        values[key] = value.strip()
    return values


def read_config_file(path: Path) -> Dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise RetainConfigError(f"config file: {e} (at {path})") from e
    return parse_config_text(text, path.name)


def flag_name(key: str) -> str:
    return "--" + key.replace("_", "-")


def add_config_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key = value file")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    for key, field in RunConfig.__fields__.items():
        if field.outer_type_ is bool:
            parser.add_argument(
                flag_name(key), dest=key, action="store_const", const="true", default=SUPPRESS
            )
        else:
            parser.add_argument(flag_name(key), dest=key, default=SUPPRESS, metavar="VALUE")


def resolve_config(args: Namespace) -> RunConfig:
    """Defaults < config file < flags."""
    values: Dict[str, Any] = {}
    if args.config is not None:
        values.update(read_config_file(args.config))
    values.update(
        {key: getattr(args, key) for key in RunConfig.__fields__ if hasattr(args, key)}
    )
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise RetainConfigError(f"run config: {e}") from e


def _format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return value.name
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(item) for item in value)
    return str(value)


def format_config(config: RunConfig) -> str:
    lines = [
        f"{key} = {_format_value(value)}"
        for key, value in sorted(config.dict().items())
        if value is not None
    ]
    return "\n".join(lines) + "\n"


def echo_config(config: RunConfig, run_dir: Path) -> None:
    (run_dir / CONFIG_ECHO).write_text(format_config(config), encoding="utf-8")


def parse_grid(text: str) -> Dict[str, List[Any]]:
    """``name=v1,v2;name=v1`` into a grid of typed values."""
    grid: Dict[str, List[Any]] = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in RunConfig.__fields__:
            raise RetainConfigError(f"grid entry: {part!r} is not name=values (at grid)")
        field = RunConfig.__fields__[key]
        values = []
        for item in raw.split(","):
            value, error = field.validate(item.strip(), {}, loc=key)
            if error:
                raise RetainConfigError(f"grid value: {item!r} is invalid for {key} (at grid)")
            values.append(value)
        grid[key] = values
    if not grid:
        raise RetainConfigError(f"grid: {text!r} is empty (at grid)")
    return grid
