"""Chronological and leave-one-patient-out splits.

Each training patient's retained grid steps are cut chronologically, the
first 75% for training and the rest for validation, and windows are built on
each side separately so none spans the cut. Training patients are
standardized with their own training windows; the held-out patient with the
pooled training windows of every training patient.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Sequence, Tuple

from pydantic import BaseModel

from ..errors import RetainContractError, assert_between, assert_ge, assert_in
from ..nn import ModelDimensions
from .series import PatientSeries, Segment
from .standardize import StandardizationParams, apply_standardizer, fit_standardizer
from .windows import SampleWindow, make_windows

TRAIN_FRACTION = 0.75
INNER_FOLDS = 4

LOG = logging.getLogger(__name__)


class OuterFold(BaseModel):
    test_patient: str
    train_patients: List[str]


class InnerFold(BaseModel):
    train_patients: List[str]
    valid_patients: List[str]


def split_series(
    series: PatientSeries, fraction: float = TRAIN_FRACTION
) -> Tuple[PatientSeries, PatientSeries]:
    """Cut the retained steps at ``round(fraction * n)``, training side first."""
    assert_between("train fraction", 0.0, 1.0, fraction, "split_series")
    cut = int(round(fraction * len(series)))
    head: List[Segment] = []
    tail: List[Segment] = []
    seen = 0
    for segment in series:
        length = len(segment)
        if seen + length <= cut:
            head.append(segment)
        elif seen >= cut:
            tail.append(segment)
        else:
            k = cut - seen
            head.append(
                replace(
                    segment,
                    glucose=segment.glucose[:k],
                    insulin=segment.insulin[:k],
                    cho=segment.cho[:k],
                )
            )
            tail.append(
                replace(
                    segment,
                    start_index=segment.start_index + k,
                    glucose=segment.glucose[k:],
                    insulin=segment.insulin[k:],
                    cho=segment.cho[k:],
                )
            )
        seen += length
    return replace(series, segments=tuple(head)), replace(series, segments=tuple(tail))


def split_protocol(patients: Sequence[str]) -> List[OuterFold]:
    """Leave-one-patient-out folds, in the given patient order."""
    assert_ge("patient count", 2, len(patients), "split_protocol")
    if len(set(patients)) != len(patients):
        raise RetainContractError(f"patients: duplicate id in {list(patients)!r} (at split_protocol)")
    return [
        OuterFold(
            test_patient=patient,
            train_patients=[other for other in patients if other != patient],
        )
        for patient in patients
    ]


def cross_validation_folds(patients: Sequence[str], k: int = INNER_FOLDS) -> List[InnerFold]:
    """Patient-level k-fold split; ``k`` is capped at the patient count."""
    assert_ge("patient count", 2, len(patients), "cross_validation_folds")
    assert_ge("fold count", 2, k, "cross_validation_folds")
    k = min(k, len(patients))
    buckets: List[List[str]] = [list(patients[i::k]) for i in range(k)]
    return [
        InnerFold(
            train_patients=[p for p in patients if p not in bucket],
            valid_patients=bucket,
        )
        for bucket in buckets
    ]


@dataclass
class FoldData:
    train: List[SampleWindow]
    valid: List[SampleWindow]
    test: List[SampleWindow]
    pooled: StandardizationParams
    standardizers: Dict[str, StandardizationParams] = field(default_factory=dict)


def prepare_fold(
    series: Mapping[str, PatientSeries],
    train_patients: Sequence[str],
    test_patients: Sequence[str],
    dims: ModelDimensions,
    fraction: float = TRAIN_FRACTION,
) -> FoldData:
    raw_train: List[SampleWindow] = []
    train: List[SampleWindow] = []
    valid: List[SampleWindow] = []
    standardizers: Dict[str, StandardizationParams] = {}
    for patient in train_patients:
        assert_in("patient", series.keys(), patient, "prepare_fold")
        head, tail = split_series(series[patient], fraction)
        head_windows = make_windows(head, dims)
        tail_windows = make_windows(tail, dims)
        if not head_windows:
            LOG.warning("%s has no training windows", patient)
            continue
        params = fit_standardizer(head_windows)
        standardizers[patient] = params
        raw_train.extend(head_windows)
        train.extend(apply_standardizer(head_windows, params))
        valid.extend(apply_standardizer(tail_windows, params))

    pooled = fit_standardizer(raw_train)
    test: List[SampleWindow] = []
    for patient in test_patients:
        assert_in("patient", series.keys(), patient, "prepare_fold")
        test.extend(apply_standardizer(make_windows(series[patient], dims), pooled))
    LOG.info(
        "Prepared %d train, %d validation and %d test windows",
        len(train),
        len(valid),
        len(test),
    )
    return FoldData(train, valid, test, pooled, standardizers)


def outer_fold_data(
    series: Mapping[str, PatientSeries],
    fold: OuterFold,
    dims: ModelDimensions,
    fraction: float = TRAIN_FRACTION,
) -> FoldData:
    return prepare_fold(series, fold.train_patients, [fold.test_patient], dims, fraction)


def inner_fold_data(
    series: Mapping[str, PatientSeries],
    fold: InnerFold,
    dims: ModelDimensions,
    fraction: float = TRAIN_FRACTION,
) -> Tuple[List[SampleWindow], List[SampleWindow]]:
    """Training windows of the inner training patients, and every window of
    the held-out inner patients standardized with their pooled statistics."""
    data = prepare_fold(series, fold.train_patients, fold.valid_patients, dims, fraction)
    return data.train, data.test
