"""Train a model on every patient except the optional test patient.

Each training patient is split chronologically 75/25 into training and
validation steps. With a ``grid``, hyperparameters are first selected by
cross-validation over the training patients. The run directory receives the
weight file, the standardizers the model expects and the per-epoch report.
"""
import logging
from argparse import Namespace, _SubParsersAction
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import pandas as pd

from ..data import PatientSeries, cross_validation_folds, inner_fold_data, prepare_fold
from ..errors import RetainConfigError, RetainContractError
from ..nn import ModelDimensions, Parameters, save_model
from ..serde import validated
from ..train import TrainConfig, TrainReport, grid_cells, grid_search, train
from .common import (
    MODEL_FILE,
    STANDARDIZERS_FILE,
    StandardizerBundle,
    check_patient,
    load_dataset,
    start_run,
)
from .config import RunConfig, add_config_arguments, parse_grid

TRAIN_REPORT = "train.csv"
GRID_REPORT = "grid.csv"

LOG = logging.getLogger(__name__)


def select_hyperparameters(
    config: RunConfig,
    series: Mapping[str, PatientSeries],
    train_patients: Sequence[str],
    run_dir: Path,
    report_name: str = GRID_REPORT,
) -> Tuple[ModelDimensions, TrainConfig]:
    """Cross-validate every grid cell over ``train_patients`` and return the
    dimensions and training settings of the best cell."""
    assert config.grid is not None
    grid = parse_grid(config.grid)
    try:
        grid_cells(grid)
    except RetainContractError as e:
        raise RetainConfigError(str(e)) from e
    dims, train_config = config.dims(), config.train_config()

    folds = [
        inner_fold_data(series, fold, dims, config.train_fraction)
        for fold in cross_validation_folds(train_patients, config.inner_folds)
    ]
    result = grid_search(config.model, dims, grid, folds, train_config)

    rows: List[Dict[str, object]] = []
    for cell in result.cells:
        row: Dict[str, object] = dict(cell.values)
        row.update({f"fold{i}_rmse": score for i, score in enumerate(cell.scores)})
        row["mean_rmse"] = cell.mean_rmse
        rows.append(row)
    pd.DataFrame(rows).to_csv(run_dir / report_name, index=False)
    LOG.info("Selected %s", result.best)

    best = result.best
    dims = validated(
        ModelDimensions,
        **{**dims.dict(), **{k: v for k, v in best.items() if k in ModelDimensions.__fields__}},
    )
    train_config = validated(
        TrainConfig,
        **{**train_config.dict(), **{k: v for k, v in best.items() if k in TrainConfig.__fields__}},
    )
    return dims, train_config


def fit_model(
    config: RunConfig, series: Mapping[str, PatientSeries], run_dir: Path
) -> Tuple[Parameters, ModelDimensions, StandardizerBundle, TrainReport]:
    patients = list(series)
    check_patient(config.test_patient, patients)
    test = [config.test_patient] if config.test_patient else []
    train_patients = [patient for patient in patients if patient not in test]

    if config.grid:
        dims, train_config = select_hyperparameters(config, series, train_patients, run_dir)
    else:
        dims, train_config = config.dims(), config.train_config()

    data = prepare_fold(series, train_patients, test, dims, config.train_fraction)
    params, report = train(config.model, dims, data.train, data.valid, train_config)
    bundle = StandardizerBundle(pooled=data.pooled, patients=data.standardizers)

    save_model(run_dir / MODEL_FILE, params, dims)
    bundle.save(run_dir / STANDARDIZERS_FILE)
    report.write_csv(run_dir / TRAIN_REPORT)
    LOG.info("Wrote model to '%s'", run_dir / MODEL_FILE)
    return params, dims, bundle, report


def train_command(args: Namespace) -> None:
    config, run_dir = start_run(args, "train")
    series = load_dataset(config, run_dir)
    fit_model(config, series, run_dir)


def train_subparser(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser("train", description=__doc__)
    parser.set_defaults(command=train_command)
    add_config_arguments(parser)
