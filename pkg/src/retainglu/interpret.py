"""Exact additive contributions of every input value to a RETAIN prediction.

With attention fixed by a forward pass, the prediction is linear in the
inputs: ``y = sum_ij omega[i, j] + b`` where

    omega[i, j] = alpha_i * W (beta_i * W_emb[:, j]) * x[i, j]

The model predicts standardized glucose. Given the window's standardizer,
contributions are scaled by the glucose std and the glucose mean is folded
into the bias, so that they sum to the prediction in mg/dL. Their
absolute normalized form divides ``|omega|`` by its sum so that samples can
be compared. A sample whose contributions are all zero has no normalized form;
it is flagged and left out of every profile.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .data import SampleWindow, StandardizationParams, stack_inputs
from .errors import (
    RetainConsistencyError,
    RetainContractError,
    RetainShapeError,
    assert_eq,
    assert_ge,
    assert_gt,
    assert_lt,
)
from .nn import ForwardTrace, RetainParameters, retain_traces
from .serde import SIGNALS, Event, Signal

IDENTITY_TOLERANCE = 1e-9
NO_EVENT_WINDOW = 12
PERIOD_MINUTES = 5
PROFILE_COLUMNS = ("signal", "offset_min", "value", "count")

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContributionMap:
    omega: np.ndarray  # H×r
    bias: float
    prediction: float
    omega_an: Optional[np.ndarray]  # None when every omega is zero

    @property
    def degenerate(self) -> bool:
        return self.omega_an is None

    @property
    def residual(self) -> float:
        """Relative mismatch between the decomposition and the prediction."""
        total = float(self.omega.sum()) + self.bias
        return abs(total - self.prediction) / max(1.0, abs(self.prediction))


@dataclass(frozen=True)
class ContributionSample:
    contributions: ContributionMap
    patient_id: str
    t_index: int
    insulin_lag: Optional[int]
    cho_lag: Optional[int]

    def event_lag(self, event: Event) -> Optional[int]:
        return self.insulin_lag if event == Event.insulin else self.cho_lag

    def quiet_for(self, steps: int) -> bool:
        return all(lag is None or lag >= steps for lag in (self.insulin_lag, self.cho_lag))


@dataclass(frozen=True)
class ContributionProfile:
    history: int
    count: int
    values: Optional[np.ndarray]  # H×r, None when count is 0
    statistic: str

    def offsets(self) -> np.ndarray:
        """Minutes relative to the prediction time, oldest first."""
        return (np.arange(self.history) - (self.history - 1)) * PERIOD_MINUTES


def contribution_coefficients(params: RetainParameters, trace: ForwardTrace) -> np.ndarray:
    """``alpha_i * W (beta_i * W_emb[:, j])``, the contribution per unit input."""
    W = params.W.data[0]
    W_emb = params.W_emb.data
    coefficients: np.ndarray = trace.alphas[:, np.newaxis] * ((trace.betas * W) @ W_emb)
    return coefficients


def contributions(
    params: RetainParameters,
    trace: ForwardTrace,
    x: np.ndarray,
    standardizer: Optional[StandardizationParams] = None,
) -> ContributionMap:
    """Decompose one prediction; in mg/dL when ``standardizer`` is given,
    otherwise in model output units."""
    x = np.asarray(x, dtype=np.float64)
    history, inputs = trace.betas.shape[0], params.W_emb.shape[1]
    assert_eq("input shape", (history, inputs), x.shape, "contributions", RetainShapeError)

    omega = contribution_coefficients(params, trace) * x
    bias = float(params.b.data)
    prediction = trace.prediction
    total = float(omega.sum()) + bias
    if abs(total - prediction) > IDENTITY_TOLERANCE * max(1.0, abs(prediction)):
        raise RetainConsistencyError(
            f"decomposition: {total!r} != {prediction!r} (at contributions)"
        )

    if standardizer is not None:
        omega = omega * standardizer.target_scale
        bias = float(standardizer.unscale_target(bias))
        prediction = float(standardizer.unscale_target(prediction))

    magnitude = np.abs(omega)
    norm = float(magnitude.sum())
    omega_an = magnitude / norm if norm > 0 else None
    return ContributionMap(omega=omega, bias=bias, prediction=prediction, omega_an=omega_an)


def contribution_samples(
    params: RetainParameters, windows: Sequence[SampleWindow]
) -> List[ContributionSample]:
    """Decompose the prediction of every standardized window."""
    x = stack_inputs(windows)
    traces = retain_traces(params, x)
    samples = [
        ContributionSample(
            contributions=contributions(params, trace, window.x, window.standardizer),
            patient_id=window.patient_id,
            t_index=window.t_index,
            insulin_lag=window.insulin_lag,
            cho_lag=window.cho_lag,
        )
        for trace, window in zip(traces, windows)
    ]
    degenerate = sum(1 for sample in samples if sample.contributions.degenerate)
    if degenerate:
        LOG.warning("%d samples have all-zero contributions and are excluded", degenerate)
    return samples


def audit_decomposition(samples: Sequence[ContributionSample]) -> float:
    """Largest relative residual of the additive identity over ``samples``."""
    return max((sample.contributions.residual for sample in samples), default=0.0)


def _aggregate(
    maps: Sequence[ContributionMap],
    history: int,
    statistic: str,
    reduce: Callable[[np.ndarray], np.ndarray],
) -> ContributionProfile:
    usable = [m.omega_an for m in maps if m.omega_an is not None]
    if not usable:
        return ContributionProfile(history=history, count=0, values=None, statistic=statistic)
    stacked = np.stack(usable)
    return ContributionProfile(
        history=history, count=len(usable), values=reduce(stacked), statistic=statistic
    )


def _max(stacked: np.ndarray) -> np.ndarray:
    result: np.ndarray = stacked.max(axis=0)
    return result


def _mean(stacked: np.ndarray) -> np.ndarray:
    result: np.ndarray = stacked.mean(axis=0)
    return result


def _history_of(maps: Sequence[ContributionMap], location: str) -> int:
    assert_gt("sample count", 0, len(maps), location, RetainContractError)
    return int(maps[0].omega.shape[0])


def max_contribution_profile(maps: Sequence[ContributionMap]) -> ContributionProfile:
    return _aggregate(maps, _history_of(maps, "max_contribution_profile"), "max", _max)


def mean_contribution_profile(maps: Sequence[ContributionMap]) -> ContributionProfile:
    return _aggregate(maps, _history_of(maps, "mean_contribution_profile"), "mean", _mean)


def event_conditioned_profile(
    samples: Sequence[ContributionSample], event: Event, lag: int
) -> ContributionProfile:
    """Mean over samples whose latest ``event`` happened exactly ``lag``
    steps before the prediction time. Samples with both event types in their
    history count towards each type."""
    history = _history_of([s.contributions for s in samples], "event_conditioned_profile")
    assert_ge("event lag", 0, lag, "event_conditioned_profile", RetainContractError)
    assert_lt("event lag", history, lag, "event_conditioned_profile", RetainContractError)
    selected = [s.contributions for s in samples if s.event_lag(event) == lag]
    return _aggregate(selected, history, "mean", _mean)


def event_conditioned_profiles(
    samples: Sequence[ContributionSample], event: Event
) -> List[ContributionProfile]:
    history = _history_of([s.contributions for s in samples], "event_conditioned_profiles")
    return [event_conditioned_profile(samples, event, lag) for lag in range(history)]


def no_event_profile(
    samples: Sequence[ContributionSample], window: int = NO_EVENT_WINDOW
) -> ContributionProfile:
    """Mean over samples without insulin or CHO in the last ``window`` steps."""
    history = _history_of([s.contributions for s in samples], "no_event_profile")
    assert_gt("quiet window", 0, window, "no_event_profile", RetainContractError)
    selected = [s.contributions for s in samples if s.quiet_for(window)]
    return _aggregate(selected, history, "mean", _mean)


def effective_history(
    profile: ContributionProfile, threshold: float
) -> Dict[Signal, Optional[int]]:
    """Oldest offset in minutes at which each signal still reaches
    ``threshold``, or None if it never does."""
    result: Dict[Signal, Optional[int]] = {signal: None for signal in SIGNALS}
    if profile.values is None:
        return result
    offsets = profile.offsets()
    for signal in SIGNALS:
        (reaching,) = np.nonzero(profile.values[:, signal.value] >= threshold)
        if len(reaching):
            result[signal] = int(offsets[reaching[0]])
    return result


def profile_frame(profile: ContributionProfile) -> pd.DataFrame:
    offsets = profile.offsets()
    rows = []
    for signal in SIGNALS:
        for i, offset in enumerate(offsets):
            value = np.nan if profile.values is None else profile.values[i, signal.value]
            rows.append((signal.name, int(offset), value, profile.count))
    return pd.DataFrame(rows, columns=list(PROFILE_COLUMNS))


def write_profile_csv(profile: ContributionProfile, path: Path) -> None:
    profile_frame(profile).to_csv(path, index=False, float_format="%.10f")


def write_event_profiles_csv(profiles: Sequence[ContributionProfile], path: Path) -> None:
    """One block per lag, with the lag in minutes as the leading column."""
    frames = []
    for lag, profile in enumerate(profiles):
        frame = profile_frame(profile)
        frame.insert(0, "lag_min", lag * PERIOD_MINUTES)
        frames.append(frame)
    pd.concat(frames).to_csv(path, index=False, float_format="%.10f")


def profile_metadata(
    samples: Sequence[ContributionSample],
    quiet_window: int,
    max_residual: Optional[float] = None,
) -> Dict[str, Any]:
    degenerate = sum(1 for s in samples if s.contributions.degenerate)
    metadata: Dict[str, Any] = {
        "samples": len(samples),
        "degenerate_samples_excluded": degenerate,
        "units": "mg/dL",
        "event_definition": "strictly positive raw amount",
        "event_lag": "latest event of the type, earlier events of the same type ignored",
        "both_event_types": "included under each type",
        "no_event_window_min": quiet_window * PERIOD_MINUTES,
    }
    if max_residual is not None:
        metadata["max_decomposition_residual"] = max_residual
    return metadata


def write_metadata_json(metadata: Dict[str, Any], path: Path) -> None:
    with path.open("w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
