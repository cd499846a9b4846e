"""Per-signal standardization fitted on training windows only.

Every parameter set records a digest of the windows it was fitted on, so a
test set can be audited against the fit set for leakage.
"""
import hashlib
import logging
from dataclasses import replace
from typing import List, Sequence, Union

import numpy as np
from pydantic import BaseModel, validator

from ..errors import RetainContractError, assert_eq, assert_gt
from ..serde import SIGNALS, Signal
from .windows import SampleWindow

LOG = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class StandardizationParams(BaseModel):
    mean: List[float]
    std: List[float]
    count: int
    fit_digest: str

    class Config:
        allow_mutation = False

    @validator("std", each_item=True)
    @classmethod
    def validate_std(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be strictly positive")
        return value

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - np.asarray(self.mean)) / np.asarray(self.std)

    def invert(self, z: np.ndarray) -> np.ndarray:
        return z * np.asarray(self.std) + np.asarray(self.mean)

    def scale_target(self, y: ArrayLike) -> ArrayLike:
        """Glucose in mg/dL to the standardized model output scale."""
        g = Signal.glucose.value
        return (y - self.mean[g]) / self.std[g]

    def unscale_target(self, z: ArrayLike) -> ArrayLike:
        return z * self.target_scale + self.mean[Signal.glucose.value]

    @property
    def target_scale(self) -> float:
        """mg/dL per unit of model output."""
        return self.std[Signal.glucose.value]


def window_keys(windows: Sequence[SampleWindow]) -> List[str]:
    return [f"{w.patient_id}:{w.segment_id}:{w.t_index}" for w in windows]


def fingerprint(windows: Sequence[SampleWindow]) -> str:
    digest = hashlib.sha256()
    for key in window_keys(windows):
        digest.update(key.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def fit_standardizer(windows: Sequence[SampleWindow]) -> StandardizationParams:
    assert_gt("fit window count", 0, len(windows), "fit_standardizer", RetainContractError)
    for window in windows:
        if window.standardizer is not None:
            raise RetainContractError(
                f"fit window: already standardized (at {window.patient_id}:{window.t_index})"
            )
    values = np.concatenate([window.x for window in windows])
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    for signal in SIGNALS:
        if std[signal.value] == 0:
            LOG.warning(
                "%s has zero variance in the fit set, using std 1", signal.name
            )
    std = np.where(std > 0, std, 1.0)
    params = StandardizationParams(
        mean=mean.tolist(),
        std=std.tolist(),
        count=len(windows),
        fit_digest=fingerprint(windows),
    )
    LOG.debug("Fitted standardizer on %d windows", len(windows))
    return params


def apply_standardizer(
    windows: Sequence[SampleWindow], params: StandardizationParams
) -> List[SampleWindow]:
    """Standardized copies of ``windows``; targets stay in mg/dL."""
    standardized = []
    for window in windows:
        if window.standardizer is not None:
            raise RetainContractError(
                f"window: already standardized (at {window.patient_id}:{window.t_index})"
            )
        assert_eq("signal count", len(params.mean), window.x.shape[1], window.t_index)
        x = params.apply(window.x)
        x.setflags(write=False)
        standardized.append(replace(window, x=x, standardizer=params))
    return standardized


def destandardize(windows: Sequence[SampleWindow]) -> List[np.ndarray]:
    """Raw inputs recovered from standardized windows."""
    raw = []
    for window in windows:
        if window.standardizer is None:
            raise RetainContractError(
                f"window: not standardized (at {window.patient_id}:{window.t_index})"
            )
        raw.append(window.standardizer.invert(window.x))
    return raw


def fitted_on(params: StandardizationParams, windows: Sequence[SampleWindow]) -> bool:
    return params.count == len(windows) and params.fit_digest == fingerprint(windows)
