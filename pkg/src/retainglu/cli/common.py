import logging
from argparse import Namespace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ValidationError

from ..data import (
    PatientSeries,
    SampleWindow,
    StandardizationParams,
    apply_standardizer,
    ingest_csv,
    make_windows,
    write_series_csv,
)
from ..errors import RetainConfigError, RetainFormatError
from ..nn import ModelDimensions, SavedModel, load_model
from .config import RunConfig, echo_config, resolve_config
from .utils import configure_debug_logging, make_run_dir

MODEL_FILE = "model.rtnw"
STANDARDIZERS_FILE = "standardizers.json"
SERIES_DIR = "series"

LOG = logging.getLogger(__name__)


class StandardizerBundle(BaseModel):
    """Statistics a trained model expects its inputs to be standardized with."""

    pooled: StandardizationParams
    patients: Dict[str, StandardizationParams] = {}

    def save(self, path: Path) -> None:
        path.write_text(self.json(indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "StandardizerBundle":
        try:
            return cls.parse_file(path)
        except (OSError, ValidationError) as e:
            raise RetainFormatError(f"standardizers: {e} (at {path})") from e


def start_run(args: Namespace, command: str) -> Tuple[RunConfig, Path]:
    config = resolve_config(args)
    run_dir = make_run_dir(config.output_dir, command, config.run_name)
    configure_debug_logging("DEBUG" if args.verbose else "INFO", run_dir)
    echo_config(config, run_dir)
    LOG.info("Run directory '%s'", run_dir)
    return config, run_dir


def load_dataset(config: RunConfig, run_dir: Optional[Path] = None) -> Dict[str, PatientSeries]:
    """Ingest every CSV of the data directory, keyed and ordered by patient."""
    if config.data_dir is None:
        raise RetainConfigError("data_dir: None is not a directory (at config)")
    if not config.data_dir.is_dir():
        raise RetainFormatError(f"data_dir: {str(config.data_dir)!r} does not exist (at config)")
    paths = sorted(config.data_dir.glob("*.csv"))
    if not paths:
        raise RetainFormatError(f"data_dir: no CSV files in {str(config.data_dir)!r} (at config)")

    series = {}
    for path in paths:
        patient = ingest_csv(path, period=config.period, max_gap=config.max_gap)
        series[patient.patient_id] = patient
    LOG.info("Loaded %d patients from '%s'", len(series), config.data_dir)

    if run_dir is not None:
        cache = run_dir / SERIES_DIR
        cache.mkdir(exist_ok=True)
        for patient_id, patient in series.items():
            write_series_csv(patient, cache / f"{patient_id}.csv")
    return series


def check_patient(patient: Optional[str], patients: Sequence[str]) -> None:
    if patient is not None and patient not in patients:
        raise RetainConfigError(f"test_patient: {patient!r} in {list(patients)!r} (at config)")


def load_trained(weights: Path) -> Tuple[SavedModel, StandardizerBundle]:
    if not weights.is_file():
        raise RetainFormatError(f"weights: {str(weights)!r} does not exist (at config)")
    saved = load_model(weights)
    bundle = StandardizerBundle.load(weights.parent / STANDARDIZERS_FILE)
    return saved, bundle


def pooled_windows(
    series: Mapping[str, PatientSeries],
    patients: Sequence[str],
    dims: ModelDimensions,
    pooled: StandardizationParams,
) -> List[SampleWindow]:
    windows: List[SampleWindow] = []
    for patient in patients:
        windows.extend(apply_standardizer(make_windows(series[patient], dims), pooled))
    return windows
