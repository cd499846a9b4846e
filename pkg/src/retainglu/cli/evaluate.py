"""Evaluate RMSE, MAPE, time lag and CG-EGA per patient.

By default this runs the leave-one-patient-out protocol: one model per held
out patient, trained on all others. With ``weights`` a trained model is
evaluated instead, and with ``oracle`` the true targets are scored.
"""
import logging
from argparse import Namespace, _SubParsersAction
from pathlib import Path
from typing import Dict, List, Mapping

from ..data import PatientSeries, make_windows, outer_fold_data, split_protocol
from ..metrics import (
    Evaluation,
    ModelPredictor,
    OraclePredictor,
    evaluate,
    write_points_csv,
    write_reports_csv,
    write_reports_json,
)
from ..nn import save_model
from ..train import train
from .common import check_patient, load_dataset, load_trained, pooled_windows, start_run
from .config import RunConfig, add_config_arguments
from .train import select_hyperparameters

METRICS_CSV = "metrics.csv"
METRICS_JSON = "metrics.json"
POINTS_CSV = "points.csv"
GRID_FOLD_REPORT = "grid-{}.csv"

LOG = logging.getLogger(__name__)


def _patients(config: RunConfig, series: Mapping[str, PatientSeries]) -> List[str]:
    patients = list(series)
    check_patient(config.test_patient, patients)
    return [config.test_patient] if config.test_patient else patients


def evaluate_oracle(config: RunConfig, series: Mapping[str, PatientSeries]) -> Evaluation:
    dims = config.dims()
    windows = []
    for patient in _patients(config, series):
        windows.extend(make_windows(series[patient], dims))
    return evaluate(OraclePredictor(), windows, config.shift)


def evaluate_weights(config: RunConfig, series: Mapping[str, PatientSeries]) -> Evaluation:
    assert config.weights is not None
    saved, bundle = load_trained(config.weights)
    windows = pooled_windows(series, _patients(config, series), saved.dims, bundle.pooled)
    shift = saved.dims.horizon if config.max_shift is None else config.max_shift
    return evaluate(ModelPredictor(saved.params), windows, shift)


def evaluate_protocol(
    config: RunConfig, series: Mapping[str, PatientSeries], run_dir: Path
) -> Evaluation:
    """Leave one patient out, training a fresh model per fold. With a
    ``grid``, each fold first selects its hyperparameters by cross-validation
    over its own training patients."""
    selected = _patients(config, series)
    combined = Evaluation()
    for fold in split_protocol(list(series)):
        if fold.test_patient not in selected:
            continue
        LOG.info("Fold with test patient %s", fold.test_patient)
        if config.grid:
            dims, train_config = select_hyperparameters(
                config,
                series,
                fold.train_patients,
                run_dir,
                GRID_FOLD_REPORT.format(fold.test_patient),
            )
        else:
            dims, train_config = config.dims(), config.train_config()
        data = outer_fold_data(series, fold, dims, config.train_fraction)
        params, report = train(config.model, dims, data.train, data.valid, train_config)
        save_model(run_dir / f"model-{fold.test_patient}.rtnw", params, dims)
        report.write_csv(run_dir / f"train-{fold.test_patient}.csv")
        result = evaluate(ModelPredictor(params), data.test, config.shift)
        combined.patients.extend(result.patients)
    return combined


def write_evaluation(evaluation: Evaluation, run_dir: Path) -> Dict[str, Path]:
    paths = {
        "csv": run_dir / METRICS_CSV,
        "json": run_dir / METRICS_JSON,
        "points": run_dir / POINTS_CSV,
    }
    write_reports_csv(evaluation.reports, paths["csv"])
    write_reports_json(evaluation.reports, paths["json"])
    write_points_csv(evaluation, paths["points"])
    LOG.info("Wrote metrics for %d patients to '%s'", len(evaluation.patients), paths["csv"])
    return paths


def evaluate_command(args: Namespace) -> None:
    config, run_dir = start_run(args, "evaluate")
    series = load_dataset(config, run_dir)
    if config.oracle:
        evaluation = evaluate_oracle(config, series)
    elif config.weights is not None:
        evaluation = evaluate_weights(config, series)
    else:
        evaluation = evaluate_protocol(config, series, run_dir)
    write_evaluation(evaluation, run_dir)


def evaluate_subparser(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser("evaluate", description=__doc__)
    parser.set_defaults(command=evaluate_command)
    add_config_arguments(parser)
