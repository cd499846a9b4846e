from .series import (
    PatientSeries,
    Segment,
    ingest_csv,
    read_series_csv,
    resample,
    write_series_csv,
)
from .split import (
    FoldData,
    InnerFold,
    OuterFold,
    cross_validation_folds,
    inner_fold_data,
    outer_fold_data,
    prepare_fold,
    split_protocol,
    split_series,
)
from .standardize import (
    StandardizationParams,
    apply_standardizer,
    destandardize,
    fingerprint,
    fit_standardizer,
    fitted_on,
)
from .windows import SampleWindow, make_windows, stack_inputs, targets

__all__ = [
    "FoldData",
    "InnerFold",
    "OuterFold",
    "PatientSeries",
    "SampleWindow",
    "Segment",
    "StandardizationParams",
    "apply_standardizer",
    "cross_validation_folds",
    "destandardize",
    "fingerprint",
    "fit_standardizer",
    "fitted_on",
    "ingest_csv",
    "inner_fold_data",
    "make_windows",
    "outer_fold_data",
    "prepare_fold",
    "read_series_csv",
    "resample",
    "split_protocol",
    "split_series",
    "stack_inputs",
    "targets",
    "write_series_csv",
]
