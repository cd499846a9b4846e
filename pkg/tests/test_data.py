import numpy as np
import pytest

from retainglu.data import (
    OuterFold,
    apply_standardizer,
    cross_validation_folds,
    destandardize,
    fit_standardizer,
    fitted_on,
    ingest_csv,
    make_windows,
    outer_fold_data,
    prepare_fold,
    read_series_csv,
    split_protocol,
    split_series,
    stack_inputs,
    write_series_csv,
)
from retainglu.errors import RetainContractError, RetainFormatError
from retainglu.nn import ModelDimensions
from retainglu.serde import Event

from conftest import make_series, wave_series

HEADER = "timestamp,glucose,insulin,cho\n"


def write_csv(tmp_path, rows, name="p1.csv"):
    path = tmp_path / name
    path.write_text(HEADER + "".join(row + "\n" for row in rows), encoding="utf-8")
    return path


def test_on_grid_passthrough(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "2021-03-01T00:00:00,100,0,0",
            "2021-03-01T00:05:00,110,1.5,0",
            "2021-03-01T00:10:00,120,0,30",
        ],
    )
    series = ingest_csv(path)
    assert series.patient_id == "p1"
    (segment,) = series.segments
    np.testing.assert_array_equal(segment.glucose, [100.0, 110.0, 120.0])
    np.testing.assert_array_equal(segment.insulin, [0.0, 1.5, 0.0])
    np.testing.assert_array_equal(segment.cho, [0.0, 0.0, 30.0])


def test_interpolates_midpoint(tmp_path):
    path = write_csv(tmp_path, ["2021-03-01T00:00:00,100,0,0", "2021-03-01T00:10:00,110,0,0"])
    (segment,) = ingest_csv(path).segments
    np.testing.assert_allclose(segment.glucose, [100.0, 105.0, 110.0])


def test_events_summed_in_bin(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "2021-03-01T00:00:00,100,0,0",
            "2021-03-01T00:04:00,,1,0",
            "2021-03-01T00:06:00,,2,0",
            "2021-03-01T00:10:00,110,0,0",
        ],
    )
    (segment,) = ingest_csv(path).segments
    np.testing.assert_array_equal(segment.insulin, [0.0, 3.0, 0.0])


def test_duplicate_readings_averaged(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "2021-03-01T00:00:00,100,0,0",
            "2021-03-01T00:00:00,104,0,0",
            "2021-03-01T00:05:00,110,0,0",
        ],
    )
    (segment,) = ingest_csv(path).segments
    np.testing.assert_allclose(segment.glucose, [102.0, 110.0])


def test_long_gap_splits_segments(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "2021-03-01T00:00:00,100,0,0",
            "2021-03-01T00:05:00,100,0,0",
            "2021-03-01T01:00:00,120,0,0",
            "2021-03-01T01:05:00,125,0,0",
        ],
    )
    series = ingest_csv(path)
    assert [len(segment) for segment in series] == [2, 2]
    assert series.segments[1].start_index == 12


@pytest.mark.parametrize(
    "row,column,line",
    [
        ("2021-03-01T00:05:00,abc,0,0", "glucose", 3),
        ("2021-03-01T00:05:00,100,-1,0", "insulin", 3),
        ("not a time,100,0,0", "timestamp", 3),
        ("2021-02-28T23:00:00,100,0,0", "timestamp", 3),
        ("2021-03-01T00:05:00,0,0,0", "glucose", 3),
    ],
)
def test_format_errors_name_row(tmp_path, row, column, line):
    path = write_csv(tmp_path, ["2021-03-01T00:00:00,100,0,0", row])
    with pytest.raises(RetainFormatError, match=f"{column}.*row {line}"):
        ingest_csv(path)


def test_missing_columns(tmp_path):
    path = tmp_path / "p1.csv"
    path.write_text("timestamp,glucose\n2021-03-01T00:00:00,100\n", encoding="utf-8")
    with pytest.raises(RetainFormatError, match="missing columns"):
        ingest_csv(path)


def test_series_cache_round_trip(tmp_path):
    series = wave_series("p1", steps=30)
    path = tmp_path / "p1.csv"
    write_series_csv(series, path)
    loaded = read_series_csv(path)
    assert len(loaded) == len(series)
    np.testing.assert_allclose(loaded.segments[0].glucose, series.segments[0].glucose)


@pytest.mark.parametrize("extra,count", [(0, 1), (4, 5)])
def test_window_counts(tiny_dims, extra, count):
    steps = tiny_dims.history + tiny_dims.horizon + extra
    windows = make_windows(make_series(np.full(steps, 100.0)), tiny_dims)
    assert len(windows) == count


def test_short_segment_has_no_windows(tiny_dims):
    steps = tiny_dims.history + tiny_dims.horizon - 1
    assert make_windows(make_series(np.full(steps, 100.0)), tiny_dims) == []


def test_windows_stay_inside_segments(tiny_dims, tmp_path):
    rows = [f"2021-03-01T00:{5 * i:02d}:00,{100 + i},0,0" for i in range(8)]
    rows += [f"2021-03-01T01:{10 + 5 * i:02d}:00,{150 + i},0,0" for i in range(8)]
    series = ingest_csv(write_csv(tmp_path, rows))
    windows = make_windows(series, tiny_dims)
    assert len(windows) == 6
    for window in windows:
        segment = series.segments[window.segment_id]
        assert segment.start_index + tiny_dims.history - 1 <= window.t_index
        assert window.t_index + tiny_dims.horizon < segment.stop_index


def test_window_content_and_event_lags(tiny_dims):
    glucose = np.arange(100.0, 110.0)
    insulin = np.zeros(10)
    cho = np.zeros(10)
    insulin[1] = 2.0
    cho[3] = 40.0
    windows = make_windows(make_series(glucose, insulin, cho), tiny_dims)
    first = windows[0]
    assert first.t_index == 3
    np.testing.assert_array_equal(first.x[:, 0], [100.0, 101.0, 102.0, 103.0])
    assert first.y == 105.0
    assert first.event_lag(Event.insulin) == 2
    assert first.event_lag(Event.cho) == 0
    assert not first.quiet_for(1)
    assert windows[-1].insulin_lag is None


def test_standardization_statistics(tiny_dims, rng):
    windows = make_windows(wave_series("p1", steps=100), tiny_dims)
    params = fit_standardizer(windows)
    standardized = apply_standardizer(windows, params)
    values = np.concatenate([w.x for w in standardized])
    np.testing.assert_allclose(values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(values.var(axis=0), 1.0, atol=1e-9)
    for raw, window in zip(destandardize(standardized), windows):
        np.testing.assert_allclose(raw, window.x, atol=1e-12)
    assert fitted_on(params, windows)
    assert standardized[0].y == windows[0].y


def test_constant_signal_standardizes_to_zero(tiny_dims):
    windows = make_windows(make_series(np.full(12, 5.0)), tiny_dims)
    params = fit_standardizer(windows)
    assert params.std == [1.0, 1.0, 1.0]
    standardized = apply_standardizer(windows, params)
    np.testing.assert_array_equal(stack_inputs(standardized), 0.0)


def test_double_standardization_rejected(tiny_dims):
    windows = make_windows(wave_series("p1", steps=30), tiny_dims)
    standardized = apply_standardizer(windows, fit_standardizer(windows))
    with pytest.raises(RetainContractError):
        apply_standardizer(standardized, fit_standardizer(windows))
    with pytest.raises(RetainContractError):
        fit_standardizer(standardized)


def test_split_counts():
    head, tail = split_series(make_series(np.full(100, 120.0)), 0.75)
    assert len(head) == 75
    assert len(tail) == 25
    assert tail.segments[0].start_index == 75


def test_split_across_segments(tmp_path):
    rows = [f"2021-03-01T00:{5 * i:02d}:00,100,0,0" for i in range(6)]
    rows += [f"2021-03-01T01:{5 * i:02d}:00,100,0,0" for i in range(2)]
    series = ingest_csv(write_csv(tmp_path, rows))
    head, tail = split_series(series, 0.75)
    assert [len(s) for s in head] == [6]
    assert [len(s) for s in tail] == [2]


def test_no_window_in_train_and_valid(tiny_dims):
    series = {name: wave_series(name, steps=200) for name in ("a", "b", "c")}
    data = prepare_fold(series, ["a", "b"], ["c"], tiny_dims)
    for patient in ("a", "b"):
        train = {w.t_index for w in data.train if w.patient_id == patient}
        valid = {w.t_index for w in data.valid if w.patient_id == patient}
        assert train and valid
        assert max(train) + tiny_dims.horizon < min(valid) - tiny_dims.history + 1
    assert {w.patient_id for w in data.test} == {"c"}
    assert all(w.standardizer == data.pooled for w in data.test)
    assert all(w.standardizer == data.standardizers[w.patient_id] for w in data.train)


def test_protocol_folds():
    patients = [f"patient{i:02d}" for i in range(1, 6)]
    folds = split_protocol(patients)
    assert len(folds) == 5
    for fold, patient in zip(folds, patients):
        assert fold.test_patient == patient
        assert len(fold.train_patients) == 4
        assert patient not in fold.train_patients


def test_protocol_needs_two_patients():
    with pytest.raises(RetainContractError):
        split_protocol(["a"])
    with pytest.raises(RetainContractError):
        split_protocol(["a", "a"])


def test_cross_validation_folds():
    folds = cross_validation_folds(["a", "b", "c", "d", "e"], 4)
    assert [fold.valid_patients for fold in folds] == [["a", "e"], ["b"], ["c"], ["d"]]
    assert folds[0].train_patients == ["b", "c", "d"]
    assert len(cross_validation_folds(["a", "b"], 4)) == 2


def test_outer_fold_data(tiny_dims):
    series = {name: wave_series(name, steps=80) for name in ("a", "b")}
    data = outer_fold_data(series, OuterFold(test_patient="a", train_patients=["b"]), tiny_dims)
    assert {w.patient_id for w in data.test} == {"a"}
    assert list(data.standardizers) == ["b"]
    assert fitted_on(data.pooled, [w for w in make_windows(split_series(series["b"])[0], tiny_dims)])


def test_model_dimensions_positive():
    with pytest.raises(ValueError):
        ModelDimensions(history=0)
