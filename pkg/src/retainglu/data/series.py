"""Patient series on a uniform grid, and their CSV forms.

Ingestion reads ``timestamp,glucose,insulin,cho`` rows. Glucose readings are
linearly interpolated onto the grid wherever the surrounding readings are at
most ``max_gap`` minutes apart; longer gaps split the series into contiguous
segments. Insulin and CHO amounts are summed onto their nearest grid step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import RetainFormatError, assert_eq, assert_gt

INGEST_COLUMNS = ("timestamp", "glucose", "insulin", "cho")
SERIES_COLUMNS = INGEST_COLUMNS + ("segment_id",)
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"
HEADER_ROWS = 1

DEFAULT_PERIOD = 5
DEFAULT_MAX_GAP = 30

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segment:
    segment_id: int
    start_index: int  # grid step of the first value, counted from the origin
    glucose: np.ndarray
    insulin: np.ndarray
    cho: np.ndarray

    def __post_init__(self) -> None:
        length = len(self.glucose)
        assert_eq("insulin length", length, len(self.insulin), self.segment_id, RetainFormatError)
        assert_eq("CHO length", length, len(self.cho), self.segment_id, RetainFormatError)
        if length and not np.all(self.glucose > 0):
            raise RetainFormatError(f"glucose: non-positive value (at segment {self.segment_id})")

    def __len__(self) -> int:
        return len(self.glucose)

    @property
    def values(self) -> np.ndarray:
        """``n×r`` matrix in signal order."""
        return np.stack([self.glucose, self.insulin, self.cho], axis=1)

    @property
    def stop_index(self) -> int:
        return self.start_index + len(self)


@dataclass(frozen=True)
class PatientSeries:
    patient_id: str
    origin: pd.Timestamp
    period: int  # minutes
    segments: Tuple[Segment, ...]

    def __post_init__(self) -> None:
        for prev, segment in zip(self.segments, self.segments[1:]):
            # strictly separated by at least one missing step
            assert_gt(
                "segment start",
                prev.stop_index,
                segment.start_index,
                segment.segment_id,
                RetainFormatError,
            )

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return sum(len(segment) for segment in self.segments)

    def timestamps(self, segment: Segment) -> pd.DatetimeIndex:
        steps = np.arange(segment.start_index, segment.stop_index)
        return self.origin + pd.to_timedelta(steps * self.period, unit="min")


def _format_error(path: Path, column: str, row: int, value: object, reason: str) -> RetainFormatError:
    return RetainFormatError(f"{path.name} {column}: {value!r} {reason} (at row {row})")


def _read_ingest_frame(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RetainFormatError(f"{path.name}: unreadable CSV ({e})") from e

    missing = [column for column in INGEST_COLUMNS if column not in frame.columns]
    if missing:
        raise RetainFormatError(f"{path.name}: missing columns {missing} (at row 1)")
    return frame


def _parse_numbers(path: Path, frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() & (raw != "")
    if bad.any():
        index = int(np.argmax(bad.to_numpy()))
        raise _format_error(path, column, index + HEADER_ROWS + 1, raw.iloc[index], "is not a number")
    array = values.to_numpy(dtype=np.float64)
    negative = array < 0
    if negative.any():
        index = int(np.argmax(negative))
        raise _format_error(path, column, index + HEADER_ROWS + 1, raw.iloc[index], "is negative")
    return array


def _parse_timestamps(path: Path, frame: pd.DataFrame) -> np.ndarray:
    raw = frame["timestamp"].str.strip()
    parsed = pd.to_datetime(raw, errors="coerce", utc=True)
    bad = parsed.isna()
    if bad.any():
        index = int(np.argmax(bad.to_numpy()))
        raise _format_error(path, "timestamp", index + HEADER_ROWS + 1, raw.iloc[index], "is not ISO-8601")
    stamps = parsed.dt.tz_localize(None).to_numpy()
    backwards = np.diff(stamps) < np.timedelta64(0, "s")
    if backwards.any():
        index = int(np.argmax(backwards)) + 1
        raise _format_error(
            path, "timestamp", index + HEADER_ROWS + 1, raw.iloc[index], "is earlier than the previous row"
        )
    return stamps


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open ``[start, stop)`` ranges of consecutive true values."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(start), int(stop)) for start, stop in zip(edges[::2], edges[1::2])]


def resample(  # pylint: disable=too-many-arguments,too-many-locals
    patient_id: str,
    stamps: np.ndarray,
    glucose: np.ndarray,
    insulin: np.ndarray,
    cho: np.ndarray,
    period: int = DEFAULT_PERIOD,
    max_gap: int = DEFAULT_MAX_GAP,
) -> PatientSeries:
    readings = ~np.isnan(glucose)
    if not readings.any():
        raise RetainFormatError(f"{patient_id} glucose: no readings (at row {HEADER_ROWS + 1})")

    origin = pd.Timestamp(stamps[readings][0])
    minutes = (stamps - np.datetime64(origin)) / np.timedelta64(1, "m")

    # average duplicate readings at the same instant
    reading_frame = pd.DataFrame({"t": minutes[readings], "g": glucose[readings]})
    reading_frame = reading_frame.groupby("t", sort=True)["g"].mean()
    times = reading_frame.index.to_numpy(dtype=np.float64)
    values = reading_frame.to_numpy(dtype=np.float64)

    steps = int(np.floor(times[-1] / period)) + 1
    grid = np.arange(steps, dtype=np.float64) * period
    after = np.searchsorted(times, grid, side="left")
    clipped = np.minimum(after, len(times) - 1)
    exact = times[clipped] == grid
    before = after - 1
    bracketed = (before >= 0) & (after < len(times))
    span = np.where(
        bracketed, times[clipped] - times[np.maximum(before, 0)], np.inf
    )
    valid = exact | (bracketed & (span <= max_gap))
    interpolated = np.interp(grid, times, values)

    insulin_grid = np.zeros(steps)
    cho_grid = np.zeros(steps)
    events = (np.nan_to_num(insulin) > 0) | (np.nan_to_num(cho) > 0)
    nearest = np.floor(minutes / period + 0.5).astype(np.int64)
    placed = events & (nearest >= 0) & (nearest < steps)
    placed[placed] &= valid[nearest[placed]]
    dropped = int(events.sum() - placed.sum())
    if dropped:
        LOG.debug("%s: dropped %d events outside retained data", patient_id, dropped)
    np.add.at(insulin_grid, nearest[placed], np.nan_to_num(insulin[placed]))
    np.add.at(cho_grid, nearest[placed], np.nan_to_num(cho[placed]))

    segments = tuple(
        Segment(
            segment_id=i,
            start_index=start,
            glucose=interpolated[start:stop].copy(),
            insulin=insulin_grid[start:stop].copy(),
            cho=cho_grid[start:stop].copy(),
        )
        for i, (start, stop) in enumerate(_runs(valid))
    )
    LOG.debug(
        "%s: %d grid steps in %d segments", patient_id, int(valid.sum()), len(segments)
    )
    return PatientSeries(patient_id=patient_id, origin=origin, period=period, segments=segments)


def ingest_csv(
    path: Path,
    patient_id: Optional[str] = None,
    period: int = DEFAULT_PERIOD,
    max_gap: int = DEFAULT_MAX_GAP,
) -> PatientSeries:
    LOG.debug("Reading patient data from '%s'...", path)
    frame = _read_ingest_frame(path)
    stamps = _parse_timestamps(path, frame)
    glucose = _parse_numbers(path, frame, "glucose")
    glucose_zero = glucose == 0
    if glucose_zero.any():
        index = int(np.argmax(glucose_zero))
        raise _format_error(path, "glucose", index + HEADER_ROWS + 1, frame["glucose"].iloc[index], "is not positive")
    insulin = _parse_numbers(path, frame, "insulin")
    cho = _parse_numbers(path, frame, "cho")
    series = resample(
        patient_id or path.stem, stamps, glucose, insulin, cho, period, max_gap
    )
    LOG.debug("Read patient data")
    return series


def write_series_csv(series: PatientSeries, path: Path) -> None:
    """Cache a resampled series, one row per retained grid step."""
    frames = []
    for segment in series:
        frame = pd.DataFrame(
            {
                "timestamp": series.timestamps(segment).strftime(TIMESTAMP_FORMAT),
                "glucose": segment.glucose,
                "insulin": segment.insulin,
                "cho": segment.cho,
                "segment_id": segment.segment_id,
            },
            columns=list(SERIES_COLUMNS),
        )
        frames.append(frame)
    combined = pd.concat(frames) if frames else pd.DataFrame(columns=list(SERIES_COLUMNS))
    combined.to_csv(path, index=False)


def read_series_csv(path: Path, period: int = DEFAULT_PERIOD) -> PatientSeries:
    LOG.debug("Reading cached series from '%s'...", path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RetainFormatError(f"{path.name}: unreadable CSV ({e})") from e
    missing = [column for column in SERIES_COLUMNS if column not in frame.columns]
    if missing:
        raise RetainFormatError(f"{path.name}: missing columns {missing} (at row 1)")
    if frame.empty:
        raise RetainFormatError(f"{path.name}: no rows (at row 2)")

    stamps = pd.to_datetime(frame["timestamp"])
    origin = stamps.iloc[0]
    steps = ((stamps - origin) / pd.Timedelta(minutes=period)).to_numpy()
    if not np.allclose(steps, np.round(steps)):
        raise RetainFormatError(f"{path.name} timestamp: off the {period}-minute grid (at row 2)")
    steps = np.round(steps).astype(np.int64)

    segments = []
    for segment_id, rows in frame.groupby("segment_id", sort=True):
        index = steps[rows.index.to_numpy()]
        if np.any(np.diff(index) != 1):
            raise RetainFormatError(
                f"{path.name} segment_id: {segment_id!r} is not contiguous (at row {rows.index[0] + 2})"
            )
        segments.append(
            Segment(
                segment_id=int(segment_id),
                start_index=int(index[0]),
                glucose=rows["glucose"].to_numpy(dtype=np.float64),
                insulin=rows["insulin"].to_numpy(dtype=np.float64),
                cho=rows["cho"].to_numpy(dtype=np.float64),
            )
        )
    return PatientSeries(
        patient_id=path.stem, origin=origin, period=period, segments=tuple(segments)
    )
