from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from ..errors import RetainContractError, RetainShapeError, assert_eq, assert_gt
from ..serde import Event, Signal
from .series import PatientSeries, Segment

if TYPE_CHECKING:  # pragma: no cover
    from ..nn import ModelDimensions
    from .standardize import StandardizationParams

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleWindow:
    """One ``H×r`` input history and its target ``PH`` steps after the last row.

    ``x`` holds raw values until a standardizer is applied, and records which
    one was. ``y`` always stays in mg/dL. ``t_index`` is the grid step of the
    last history row, so windows of the same patient are ordered by it. Event
    lags count steps back from that row to the latest step with a strictly
    positive raw amount, or are ``None`` when the history has no such step.
    """

    x: np.ndarray
    y: float
    t_index: int
    patient_id: str
    segment_id: int
    insulin_lag: Optional[int]
    cho_lag: Optional[int]
    standardizer: Optional["StandardizationParams"] = None

    @property
    def history(self) -> int:
        return int(self.x.shape[0])

    def event_lag(self, event: Event) -> Optional[int]:
        return self.insulin_lag if event == Event.insulin else self.cho_lag

    def quiet_for(self, steps: int) -> bool:
        """No event of either type in the last ``steps`` history rows."""
        return all(
            lag is None or lag >= steps for lag in (self.insulin_lag, self.cho_lag)
        )


def _latest_event(amounts: np.ndarray) -> Optional[int]:
    (positions,) = np.nonzero(amounts > 0)
    if not len(positions):
        return None
    return int(len(amounts) - 1 - positions[-1])


def segment_windows(
    patient_id: str, segment: Segment, history: int, horizon: int
) -> List[SampleWindow]:
    values = segment.values
    windows = []
    for t in range(history - 1, len(segment) - horizon):
        rows = values[t - history + 1 : t + 1]
        x = rows.copy()
        x.setflags(write=False)
        windows.append(
            SampleWindow(
                x=x,
                y=float(segment.glucose[t + horizon]),
                t_index=segment.start_index + t,
                patient_id=patient_id,
                segment_id=segment.segment_id,
                insulin_lag=_latest_event(rows[:, Signal.insulin.value]),
                cho_lag=_latest_event(rows[:, Signal.cho.value]),
            )
        )
    return windows


def make_windows(series: PatientSeries, dims: "ModelDimensions") -> List[SampleWindow]:
    """Every stride-1 window lying entirely inside one contiguous segment."""
    windows: List[SampleWindow] = []
    for segment in series:
        windows.extend(segment_windows(series.patient_id, segment, dims.history, dims.horizon))
    LOG.debug(
        "%s: %d windows from %d segments",
        series.patient_id,
        len(windows),
        len(series.segments),
    )
    return windows


def stack_inputs(windows: Sequence[SampleWindow]) -> np.ndarray:
    """``N×H×r`` inputs of a window set."""
    assert_gt("window count", 0, len(windows), "stack_inputs", RetainContractError)
    history = windows[0].history
    for window in windows:
        assert_eq("history", history, window.history, window.t_index, RetainShapeError)
    return np.stack([window.x for window in windows])


def targets(windows: Sequence[SampleWindow]) -> np.ndarray:
    return np.array([window.y for window in windows], dtype=np.float64)
