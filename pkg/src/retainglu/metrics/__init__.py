from .accuracy import PredictionTrack, mape, pearson, rmse, time_lag
from .cg_ega import (
    CgEgaOutcome,
    CgEgaResult,
    Label,
    PZone,
    Region,
    RZone,
    cg_ega,
    classify_point,
    point_zone,
    rate_zone,
    region_of,
    write_outcomes_csv,
)
from .report import (
    Evaluation,
    MetricsReport,
    ModelPredictor,
    OraclePredictor,
    PatientEvaluation,
    Predictor,
    build_track,
    evaluate,
    summarize,
    write_points_csv,
    write_reports_csv,
    write_reports_json,
)

__all__ = [
    "CgEgaOutcome",
    "CgEgaResult",
    "Evaluation",
    "Label",
    "MetricsReport",
    "ModelPredictor",
    "OraclePredictor",
    "PZone",
    "PatientEvaluation",
    "PredictionTrack",
    "Predictor",
    "RZone",
    "Region",
    "build_track",
    "cg_ega",
    "classify_point",
    "evaluate",
    "mape",
    "pearson",
    "point_zone",
    "rate_zone",
    "region_of",
    "rmse",
    "summarize",
    "time_lag",
    "write_outcomes_csv",
    "write_points_csv",
    "write_reports_csv",
    "write_reports_json",
]
