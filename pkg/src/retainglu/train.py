"""Mini-batch MSE training with Adam, early stopping and grid search.

Targets are scaled with the glucose statistics of each window's standardizer,
so the loss is in standardized units. After every epoch the validation MSE is
computed; training stops once it has not improved for ``patience`` epochs,
and the parameters of the best epoch are returned.
"""
import logging
import time
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, root_validator, validator

from .data import SampleWindow, stack_inputs, targets
from .errors import (
    RetainContractError,
    RetainNumericError,
    assert_gt,
)
from .metrics import ModelPredictor, PredictionTrack, rmse
from .nn import FAMILIES, ModelDimensions, Parameters, family_of, tensors, with_arrays
from .numeric import GradientTape, Tensor
from .serde import Family, Precision, validated

EVAL_CHUNK = 1024
REPORT_COLUMNS = ("epoch", "train_mse", "valid_mse")

LOG = logging.getLogger(__name__)

Fold = Tuple[Sequence[SampleWindow], Sequence[SampleWindow]]


class TrainConfig(BaseModel):
    learning_rate: float = 1e-3
    batch_size: int = 50
    patience: int = 25
    max_epochs: int = 500
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    precision: Precision = Precision.double

    @validator("learning_rate", "epsilon", "batch_size", "max_epochs")
    @classmethod
    def validate_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be strictly positive")
        return value

    @validator("patience")
    @classmethod
    def validate_patience(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must not be negative")
        return value

    @validator("beta1", "beta2")
    @classmethod
    def validate_beta(cls, value: float) -> float:
        if not 0 <= value < 1:
            raise ValueError("must be in [0, 1)")
        return value

    @root_validator(skip_on_failure=True)
    @classmethod
    def validate_patience_bound(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["patience"] >= values["max_epochs"]:
            raise ValueError("patience must be less than max_epochs")
        return values


class EpochRecord(BaseModel):
    epoch: int
    train_mse: float
    valid_mse: float


class TrainReport(BaseModel):
    epochs: List[EpochRecord] = []
    best_epoch: int = 0
    stopped_epoch: int = 0
    best_valid_mse: float = float("inf")
    wall_time: float = 0.0

    def write_csv(self, path: Path) -> None:
        frame = pd.DataFrame(
            [record.dict() for record in self.epochs], columns=list(REPORT_COLUMNS)
        )
        frame.to_csv(path, index=False)


class Adam:
    """Adam with bias-corrected moment estimates."""

    def __init__(self, arrays: Sequence[np.ndarray], config: TrainConfig):
        self.config = config
        self.step_count = 0
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]

    def step(
        self, arrays: Sequence[np.ndarray], grads: Sequence[np.ndarray]
    ) -> List[np.ndarray]:
        config = self.config
        self.step_count += 1
        t = self.step_count
        updated = []
        for i, (array, grad) in enumerate(zip(arrays, grads)):
            self.m[i] = config.beta1 * self.m[i] + (1 - config.beta1) * grad
            self.v[i] = config.beta2 * self.v[i] + (1 - config.beta2) * grad * grad
            m_hat = self.m[i] / (1 - config.beta1 ** t)
            v_hat = self.v[i] / (1 - config.beta2 ** t)
            updated.append(array - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon))
        return updated


def scaled_targets(windows: Sequence[SampleWindow]) -> np.ndarray:
    scaled = np.empty(len(windows))
    for i, window in enumerate(windows):
        if window.standardizer is None:
            raise RetainContractError(
                f"window: not standardized (at {window.patient_id}:{window.t_index})"
            )
        scaled[i] = window.standardizer.scale_target(window.y)
    return scaled


def mse_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    diff = pred - Tensor(target, dtype=pred.dtype)
    return (diff * diff).mean()


def evaluate_mse(params: Parameters, x: np.ndarray, z: np.ndarray) -> float:
    """MSE in scaled units, without recording a tape."""
    family = family_of(params)
    dtype = tensors(params)[0].dtype
    total = 0.0
    for start in range(0, len(x), EVAL_CHUNK):
        pred = family.forward(params, Tensor(x[start : start + EVAL_CHUNK], dtype=dtype)).numpy()
        total += float(np.sum((pred - z[start : start + EVAL_CHUNK]) ** 2))
    return total / len(x)


def train_step(
    params: Parameters, optimizer: Adam, x: np.ndarray, z: np.ndarray
) -> Tuple[Parameters, float]:
    """One Adam update on one mini-batch; returns the loss before the update."""
    family = family_of(params)
    sources = tensors(params)
    dtype = sources[0].dtype
    with GradientTape() as tape:
        loss = mse_loss(family.forward(params, Tensor(x, dtype=dtype)), z)
    grads = tape.gradient(loss, sources)
    arrays = optimizer.step([t.data for t in sources], grads)
    return with_arrays(params, arrays, dtype), loss.item()


def train(  # pylint: disable=too-many-arguments,too-many-locals
    family: Family,
    dims: ModelDimensions,
    train_windows: Sequence[SampleWindow],
    valid_windows: Sequence[SampleWindow],
    config: TrainConfig,
    initial: Optional[Parameters] = None,
) -> Tuple[Parameters, TrainReport]:
    assert_gt("train window count", 0, len(train_windows), "train", RetainContractError)
    assert_gt("validation window count", 0, len(valid_windows), "train", RetainContractError)

    dtype = config.precision.dtype
    x_train = stack_inputs(train_windows).astype(dtype)
    z_train = scaled_targets(train_windows).astype(dtype)
    x_valid = stack_inputs(valid_windows).astype(dtype)
    z_valid = scaled_targets(valid_windows).astype(dtype)

    rng = np.random.default_rng(config.seed)
    params = initial if initial is not None else FAMILIES[family].init_params(dims, rng)
    params = with_arrays(params, [t.data for t in tensors(params)], dtype)
    optimizer = Adam([t.data for t in tensors(params)], config)

    LOG.info(
        "Training %s on %d windows, validating on %d...",
        family.name,
        len(x_train),
        len(x_valid),
    )
    report = TrainReport()
    best_arrays = [t.data for t in tensors(params)]
    since_best = 0
    started = time.perf_counter()
    n = len(x_train)

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        try:
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                params, loss = train_step(params, optimizer, x_train[batch], z_train[batch])
                total += loss * len(batch)
            valid_mse = evaluate_mse(params, x_valid, z_valid)
        except RetainNumericError as e:
            raise RetainNumericError(f"training diverged: {e} (at epoch {epoch})") from e

        record = EpochRecord(epoch=epoch, train_mse=total / n, valid_mse=valid_mse)
        report.epochs.append(record)
        LOG.debug("Epoch %d: train MSE %.6f, validation MSE %.6f", epoch, record.train_mse, valid_mse)

        report.stopped_epoch = epoch
        if valid_mse < report.best_valid_mse:
            report.best_valid_mse = valid_mse
            report.best_epoch = epoch
            best_arrays = [t.data for t in tensors(params)]
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    report.wall_time = time.perf_counter() - started
    LOG.info(
        "Stopped at epoch %d, best epoch %d with validation MSE %.6f",
        report.stopped_epoch,
        report.best_epoch,
        report.best_valid_mse,
    )
    return with_arrays(params, best_arrays, dtype), report


class GridCell(BaseModel):
    values: Dict[str, Any]
    scores: List[float]
    mean_rmse: float


class GridResult(BaseModel):
    best: Dict[str, Any]
    cells: List[GridCell]


DIMENSION_KEYS = frozenset(ModelDimensions.__fields__)
TRAIN_KEYS = frozenset(TrainConfig.__fields__)
# fixed by the windows a fold was built with
WINDOW_KEYS = frozenset(("inputs", "history", "horizon"))


def grid_cells(grid: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    """Every combination, in lexicographic order of sorted keys and listed values."""
    if not grid or any(not values for values in grid.values()):
        raise RetainContractError(f"grid: {grid!r} is empty (at grid_search)")
    for key in grid:
        if key in WINDOW_KEYS:
            raise RetainContractError(f"grid key: {key!r} changes the windows (at grid_search)")
        if key not in DIMENSION_KEYS and key not in TRAIN_KEYS:
            raise RetainContractError(f"grid key: {key!r} is not a hyperparameter (at grid_search)")
    keys = sorted(grid)
    return [dict(zip(keys, combination)) for combination in product(*(grid[k] for k in keys))]


def validation_rmse(params: Parameters, windows: Sequence[SampleWindow]) -> float:
    pred = ModelPredictor(params).predict(windows)
    return rmse(PredictionTrack(true=targets(windows), pred=pred))


def grid_search(
    family: Family,
    dims: ModelDimensions,
    grid: Dict[str, Sequence[Any]],
    folds: Sequence[Fold],
    config: TrainConfig,
) -> GridResult:
    """Train every cell on every fold and keep the lowest mean validation
    RMSE; ties keep the earlier cell."""
    cells = grid_cells(grid)
    assert_gt("fold count", 0, len(folds), "grid_search", RetainContractError)
    results: List[GridCell] = []
    best: Optional[GridCell] = None
    for values in cells:
        cell_dims = validated(
            ModelDimensions,
            **{**dims.dict(), **{k: v for k, v in values.items() if k in DIMENSION_KEYS}},
        )
        cell_config = validated(
            TrainConfig,
            **{**config.dict(), **{k: v for k, v in values.items() if k in TRAIN_KEYS}},
        )
        scores = []
        for train_windows, valid_windows in folds:
            params, _ = train(family, cell_dims, train_windows, valid_windows, cell_config)
            scores.append(validation_rmse(params, valid_windows))
        cell = GridCell(values=values, scores=scores, mean_rmse=float(np.mean(scores)))
        LOG.info("Grid cell %s: mean validation RMSE %.4f", values, cell.mean_rmse)
        results.append(cell)
        if best is None or cell.mean_rmse < best.mean_rmse:
            best = cell
    assert best is not None
    return GridResult(best=best.values, cells=results)
