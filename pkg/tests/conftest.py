from typing import Optional, Sequence

import numpy as np
import pandas as pd
import pytest

from retainglu.data import PatientSeries, Segment
from retainglu.nn import ModelDimensions

ORIGIN = pd.Timestamp("2021-03-01T00:00:00")


def make_series(
    glucose: Sequence[float],
    insulin: Optional[Sequence[float]] = None,
    cho: Optional[Sequence[float]] = None,
    patient_id: str = "p1",
) -> PatientSeries:
    g = np.asarray(glucose, dtype=np.float64)
    segment = Segment(
        segment_id=0,
        start_index=0,
        glucose=g,
        insulin=np.zeros_like(g) if insulin is None else np.asarray(insulin, dtype=np.float64),
        cho=np.zeros_like(g) if cho is None else np.asarray(cho, dtype=np.float64),
    )
    return PatientSeries(patient_id=patient_id, origin=ORIGIN, period=5, segments=(segment,))


def wave_series(patient_id: str, steps: int = 300, phase: float = 0.0) -> PatientSeries:
    t = np.arange(steps)
    glucose = 140.0 + 40.0 * np.sin(2 * np.pi * t / 48 + phase)
    cho = np.where(t % 48 == 10, 40.0, 0.0)
    insulin = np.where(t % 48 == 12, 4.0, 0.0)
    return make_series(glucose, insulin, cho, patient_id)


@pytest.fixture
def tiny_dims() -> ModelDimensions:
    return ModelDimensions(inputs=3, history=4, horizon=2, embedding=3, hidden=4, layers=1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
