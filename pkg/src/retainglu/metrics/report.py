"""Per-patient evaluation reports and their population summary."""
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel
from typing_extensions import Protocol

from ..data import SampleWindow, stack_inputs, targets
from ..errors import RetainContractError, assert_gt
from ..nn import Parameters, family_of
from ..numeric import Tensor
from .accuracy import PredictionTrack, mape, rmse, time_lag
from .cg_ega import CgEgaResult, cg_ega, outcomes_frame

PREDICT_CHUNK = 1024
REPORT_COLUMNS = ("patient", "rmse", "mape", "tl", "ap", "be", "ep")
MEAN_ROW = "mean"
STD_ROW = "std"

LOG = logging.getLogger(__name__)


class Predictor(Protocol):
    def predict(self, windows: Sequence[SampleWindow]) -> np.ndarray:
        """Predicted glucose in mg/dL, one value per window."""
        ...  # pragma: no cover


class OraclePredictor:
    """Returns every window's true target."""

    def predict(self, windows: Sequence[SampleWindow]) -> np.ndarray:
        return targets(windows)


class ModelPredictor:
    def __init__(self, params: Parameters, chunk: int = PREDICT_CHUNK):
        self.params = params
        self.family = family_of(params)
        self.chunk = chunk

    def predict_scaled(self, windows: Sequence[SampleWindow]) -> np.ndarray:
        x = stack_inputs(windows)
        outputs = [
            self.family.forward(self.params, Tensor(x[start : start + self.chunk])).numpy()
            for start in range(0, len(x), self.chunk)
        ]
        return np.concatenate(outputs)

    def predict(self, windows: Sequence[SampleWindow]) -> np.ndarray:
        scaled = self.predict_scaled(windows)
        pred = np.empty_like(scaled)
        for i, window in enumerate(windows):
            if window.standardizer is None:
                raise RetainContractError(
                    f"window: not standardized (at {window.patient_id}:{window.t_index})"
                )
            pred[i] = window.standardizer.unscale_target(scaled[i])
        return pred


class MetricsReport(BaseModel):
    patient: str
    rmse: float
    mape: float
    tl: float
    ap: float
    be: float
    ep: float


@dataclass
class PatientEvaluation:
    report: MetricsReport
    track: PredictionTrack
    windows: List[SampleWindow]
    cg_ega: CgEgaResult


@dataclass
class Evaluation:
    patients: List[PatientEvaluation] = field(default_factory=list)

    @property
    def reports(self) -> List[MetricsReport]:
        return [patient.report for patient in self.patients]


def build_track(
    windows: Sequence[SampleWindow], pred: np.ndarray
) -> Tuple[PredictionTrack, List[SampleWindow]]:
    """Order one patient's windows by time and cut the track wherever the
    prediction times are not consecutive grid steps."""
    order = sorted(range(len(windows)), key=lambda i: (windows[i].t_index, windows[i].segment_id))
    ordered = [windows[i] for i in order]
    starts = [0]
    for i in range(1, len(ordered)):
        prev, window = ordered[i - 1], ordered[i]
        if window.segment_id != prev.segment_id or window.t_index != prev.t_index + 1:
            starts.append(i)
    track = PredictionTrack(
        true=targets(ordered),
        pred=np.asarray(pred, dtype=np.float64)[order],
        starts=tuple(starts),
    )
    return track, ordered


def evaluate_patient(
    patient: str, windows: Sequence[SampleWindow], pred: np.ndarray, max_shift: int
) -> PatientEvaluation:
    track, ordered = build_track(windows, pred)
    result = cg_ega(track)
    ap, be, ep = result.percentages()
    report = MetricsReport(
        patient=patient,
        rmse=rmse(track),
        mape=mape(track),
        tl=time_lag(track, max_shift),
        ap=ap,
        be=be,
        ep=ep,
    )
    LOG.info(
        "%s: RMSE %.3f, MAPE %.3f, TL %.1f, AP %.2f, BE %.2f, EP %.2f",
        patient,
        report.rmse,
        report.mape,
        report.tl,
        report.ap,
        report.be,
        report.ep,
    )
    return PatientEvaluation(report, track, ordered, result)


def evaluate(
    predictor: Predictor, windows: Sequence[SampleWindow], max_shift: int
) -> Evaluation:
    """Metrics per patient, in order of first appearance."""
    assert_gt("test window count", 0, len(windows), "evaluate", RetainContractError)
    pred = predictor.predict(windows)
    grouped: Dict[str, List[int]] = defaultdict(list)
    for i, window in enumerate(windows):
        grouped[window.patient_id].append(i)

    evaluation = Evaluation()
    for patient, indices in grouped.items():
        evaluation.patients.append(
            evaluate_patient(
                patient, [windows[i] for i in indices], pred[indices], max_shift
            )
        )
    return evaluation


def summarize(reports: Sequence[MetricsReport]) -> Tuple[MetricsReport, MetricsReport]:
    """Population mean and standard deviation (ddof 0) of every metric."""
    assert_gt("report count", 0, len(reports), "summarize", RetainContractError)
    values = np.array([[getattr(r, c) for c in REPORT_COLUMNS[1:]] for r in reports])
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    return (
        MetricsReport(patient=MEAN_ROW, **dict(zip(REPORT_COLUMNS[1:], mean.tolist()))),
        MetricsReport(patient=STD_ROW, **dict(zip(REPORT_COLUMNS[1:], std.tolist()))),
    )


def reports_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    mean, std = summarize(reports)
    rows = [report.dict() for report in list(reports) + [mean, std]]
    return pd.DataFrame(rows, columns=list(REPORT_COLUMNS))


def write_reports_csv(reports: Sequence[MetricsReport], path: Path) -> None:
    reports_frame(reports).to_csv(path, index=False, float_format="%.6f")


def write_reports_json(reports: Sequence[MetricsReport], path: Path) -> None:
    mean, std = summarize(reports)
    payload = {
        "patients": [report.dict() for report in reports],
        "mean": mean.dict(exclude={"patient"}),
        "std": std.dict(exclude={"patient"}),
    }
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)


def write_points_csv(evaluation: Evaluation, path: Path) -> None:
    """Per-point CG-EGA labels of every patient."""
    frames = []
    for patient in evaluation.patients:
        frame = outcomes_frame(patient.cg_ega.outcomes)
        frame.insert(0, "t_index", [patient.windows[p].t_index for p in frame["position"]])
        frame.insert(0, "segment_id", [patient.windows[p].segment_id for p in frame["position"]])
        frame.insert(0, "patient", patient.report.patient)
        frames.append(frame.drop(columns=["position"]))
    pd.concat(frames).to_csv(path, index=False, float_format="%.6f")
