"""Decompose RETAIN predictions and write contribution profiles.

Four long-format CSV files are written: the maximum normalized contribution,
the mean contribution after insulin and after CHO events for every event lag,
and the mean contribution without any event in the last hour. Without
``weights``, a model is first trained on every patient except the test
patient (the first patient unless given).
"""
import logging
from argparse import Namespace, _SubParsersAction
from pathlib import Path
from typing import Any, Dict, Optional

from ..errors import RetainConfigError
from ..interpret import (
    ContributionProfile,
    audit_decomposition,
    contribution_samples,
    effective_history,
    event_conditioned_profiles,
    max_contribution_profile,
    mean_contribution_profile,
    no_event_profile,
    profile_metadata,
    write_event_profiles_csv,
    write_metadata_json,
    write_profile_csv,
)
from ..nn import RetainParameters
from ..serde import Event, Family
from .common import check_patient, load_dataset, load_trained, pooled_windows, start_run
from .config import RunConfig, add_config_arguments
from .train import fit_model

MAX_CSV = "max.csv"
EVENT_CSV = "event_{}.csv"
NO_EVENT_CSV = "no_event.csv"
METADATA_JSON = "profiles.json"

LOG = logging.getLogger(__name__)


def _effective(profile: ContributionProfile, threshold: float) -> Dict[str, Optional[int]]:
    return {signal.name: offset for signal, offset in effective_history(profile, threshold).items()}


def interpret_command(args: Namespace) -> None:  # pylint: disable=too-many-locals
    config, run_dir = start_run(args, "interpret")
    series = load_dataset(config, run_dir)
    patients = list(series)
    check_patient(config.test_patient, patients)

    if config.weights is not None:
        saved, bundle = load_trained(config.weights)
        if saved.family != Family.retain:
            raise RetainConfigError(f"weights: {saved.family.name!r} == 'retain' (at config)")
        params, dims = saved.params, saved.dims
        selected = [config.test_patient] if config.test_patient else patients
    else:
        if config.model != Family.retain:
            raise RetainConfigError(f"model: {config.model.name!r} == 'retain' (at config)")
        test_patient = config.test_patient or patients[0]
        fitted = fit_model(config.copy(update={"test_patient": test_patient}), series, run_dir)
        params, dims, bundle, _ = fitted
        selected = [test_patient]

    assert isinstance(params, RetainParameters)
    windows = pooled_windows(series, selected, dims, bundle.pooled)
    samples = contribution_samples(params, windows)
    maps = [sample.contributions for sample in samples]

    max_residual = None
    if config.audit:
        max_residual = audit_decomposition(samples)
        LOG.info("Decomposition audit: max relative residual %.3e over %d samples", max_residual, len(samples))

    write_interpretation(config, run_dir, samples, maps, max_residual)


def write_interpretation(  # pylint: disable=too-many-arguments
    config: RunConfig,
    run_dir: Path,
    samples: Any,
    maps: Any,
    max_residual: Optional[float],
) -> None:
    maximum = max_contribution_profile(maps)
    mean = mean_contribution_profile(maps)
    quiet = no_event_profile(samples, config.no_event_window)
    write_profile_csv(maximum, run_dir / MAX_CSV)
    write_profile_csv(quiet, run_dir / NO_EVENT_CSV)

    metadata = profile_metadata(samples, config.no_event_window, max_residual)
    metadata["effective_history_min"] = {
        "threshold": config.threshold,
        "max": _effective(maximum, config.threshold),
        "mean": _effective(mean, config.threshold),
    }
    counts: Dict[str, Any] = {"max": maximum.count, "no_event": quiet.count}
    for event in Event:
        profiles = event_conditioned_profiles(samples, event)
        write_event_profiles_csv(profiles, run_dir / EVENT_CSV.format(event.name))
        counts[f"event_{event.name}"] = [profile.count for profile in profiles]
    metadata["counts"] = counts
    write_metadata_json(metadata, run_dir / METADATA_JSON)
    LOG.info("Wrote contribution profiles of %d samples to '%s'", len(samples), run_dir)


def interpret_subparser(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser("interpret", description=__doc__)
    parser.set_defaults(command=interpret_command)
    add_config_arguments(parser)
