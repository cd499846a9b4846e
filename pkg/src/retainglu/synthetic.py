"""Linear impulse-response glucose simulator.

Glucose is the basal level plus one response per meal minus one response per
insulin bolus, each a rise-then-decay kernel scaled by the amount and a gain,
plus Gaussian sensor noise. Meals follow a daily schedule with jittered times
and sizes; a bolus of ``cho / carb_ratio`` units accompanies every meal.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from pydantic import BaseModel, root_validator, validator

from .data import PatientSeries, Segment
from .data.series import INGEST_COLUMNS, TIMESTAMP_FORMAT
from .errors import RetainContractError, assert_gt
from .serde import validated

PERIOD = 5
STEPS_PER_DAY = 24 * 60 // PERIOD
KERNEL_SPAN = 12  # time constants
ORIGIN = pd.Timestamp("2020-01-01T00:00:00")
POPULATION_JITTER = 0.2

LOG = logging.getLogger(__name__)


class SimConfig(BaseModel):
    seed: int = 0
    days: int = 31
    basal: float = 120.0
    meal_hours: List[float] = [7.5, 12.5, 19.0]
    meal_cho: List[float] = [50.0, 70.0, 60.0]  # mean grams per meal
    meal_cho_std: float = 10.0
    meal_jitter: float = 30.0  # minutes
    cho_gain: float = 2.0  # peak mg/dL per gram
    cho_tau: float = 45.0  # minutes
    insulin_gain: float = 15.0  # peak mg/dL per unit
    insulin_tau: float = 80.0
    carb_ratio: float = 10.0  # grams per unit
    noise_std: float = 2.0
    floor: float = 40.0

    @validator("days")
    @classmethod
    def validate_days(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be strictly positive")
        return value

    @validator("basal", "cho_tau", "insulin_tau", "carb_ratio", "floor")
    @classmethod
    def validate_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be strictly positive")
        return value

    @validator("cho_gain", "insulin_gain", "noise_std", "meal_cho_std", "meal_jitter")
    @classmethod
    def validate_non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("must not be negative")
        return value

    @validator("meal_hours", each_item=True)
    @classmethod
    def validate_hour(cls, value: float) -> float:
        if not 0 <= value < 24:
            raise ValueError("must be in [0, 24)")
        return value

    @root_validator(skip_on_failure=True)
    @classmethod
    def validate_schedule(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if len(values["meal_hours"]) != len(values["meal_cho"]):
            raise ValueError("meal_hours and meal_cho must have the same length")
        return values


def kernel(minutes: np.ndarray, tau: float) -> np.ndarray:
    """``4 (exp(-t/tau) - exp(-2t/tau))``, zero before the event; peaks at 1
    when ``t = tau ln 2``."""
    t = np.maximum(minutes, 0.0)
    response: np.ndarray = 4.0 * (np.exp(-t / tau) - np.exp(-2.0 * t / tau))
    return np.where(minutes >= 0, response, 0.0)


def _respond(impulses: np.ndarray, tau: float) -> np.ndarray:
    length = min(len(impulses), int(np.ceil(KERNEL_SPAN * tau / PERIOD)) + 1)
    taps = kernel(np.arange(length) * float(PERIOD), tau)
    response: np.ndarray = np.convolve(impulses, taps)[: len(impulses)]
    return response


def meal_schedule(config: SimConfig, rng: np.random.Generator, steps: int) -> np.ndarray:
    """CHO grams per grid step."""
    cho = np.zeros(steps)
    for day in range(config.days):
        for hour, mean in zip(config.meal_hours, config.meal_cho):
            minutes = day * 24 * 60 + hour * 60 + rng.normal(0.0, config.meal_jitter)
            step = int(np.clip(round(minutes / PERIOD), 0, steps - 1))
            grams = max(5.0, round(rng.normal(mean, config.meal_cho_std)))
            cho[step] += grams
    return cho


def glucose_response(config: SimConfig, cho: np.ndarray, insulin: np.ndarray) -> np.ndarray:
    """Noise-free glucose, before the floor is applied."""
    rise = config.cho_gain * _respond(cho, config.cho_tau)
    fall = config.insulin_gain * _respond(insulin, config.insulin_tau)
    return config.basal + rise - fall


def simulate(config: SimConfig, patient_id: str = "patient") -> PatientSeries:
    rng = np.random.default_rng(config.seed)
    steps = config.days * STEPS_PER_DAY
    cho = meal_schedule(config, rng, steps)
    insulin = np.round(cho / config.carb_ratio, 1)
    glucose = glucose_response(config, cho, insulin)
    if config.noise_std > 0:
        glucose = glucose + rng.normal(0.0, config.noise_std, size=steps)
    glucose = np.maximum(glucose, config.floor)
    LOG.debug(
        "%s: %d steps, %d meals, glucose %.1f to %.1f",
        patient_id,
        steps,
        int(np.count_nonzero(cho)),
        glucose.min(),
        glucose.max(),
    )
    segment = Segment(segment_id=0, start_index=0, glucose=glucose, insulin=insulin, cho=cho)
    return PatientSeries(patient_id=patient_id, origin=ORIGIN, period=PERIOD, segments=(segment,))


def patient_name(index: int) -> str:
    return f"patient{index + 1:02d}"


def population(config: SimConfig, count: int) -> List[SimConfig]:
    """Per-patient configurations with distinct seeds and jittered dynamics."""
    assert_gt("patient count", 0, count, "population", RetainContractError)
    rng = np.random.default_rng(config.seed)
    configs = []
    for i in range(count):
        factors = rng.uniform(1 - POPULATION_JITTER, 1 + POPULATION_JITTER, size=4)
        configs.append(
            validated(
                SimConfig,
                **{
                    **config.dict(),
                    "seed": config.seed + i + 1,
                    "cho_gain": config.cho_gain * factors[0],
                    "cho_tau": config.cho_tau * factors[1],
                    "insulin_gain": config.insulin_gain * factors[2],
                    "insulin_tau": config.insulin_tau * factors[3],
                },
            )
        )
    return configs


def write_ingest_csv(series: PatientSeries, path: Path) -> None:
    """Write a series in the ingestion schema."""
    frames = [
        pd.DataFrame(
            {
                "timestamp": series.timestamps(segment).strftime(TIMESTAMP_FORMAT),
                "glucose": segment.glucose,
                "insulin": segment.insulin,
                "cho": segment.cho,
            },
            columns=list(INGEST_COLUMNS),
        )
        for segment in series
    ]
    pd.concat(frames).to_csv(path, index=False, float_format="%.3f")
    LOG.debug("Wrote %s", path)
