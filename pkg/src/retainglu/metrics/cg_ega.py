"""Continuous glucose error grid analysis.

Every point after the first of a segment gets a point-error zone from the
(true, predicted) glucose pair and a rate-error zone from the (true,
predicted) rates of change, both in mg/dL and mg/dL/min. The glycemic region
of the true value selects the matrix combining the two zones into an accurate
prediction (AP), benign error (BE) or erroneous prediction (EP).

Point-zone boundaries start from the Clarke grid. When the true rate exceeds
1 mg/dL/min the upper boundaries move up by 10 mg/dL (20 above 2 mg/dL/min);
falling rates move the lower boundaries down the same way. Points on a zone
edge fall into the more accurate zone.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import RetainDomainError
from ..serde import NamedEnum
from .accuracy import PERIOD_MINUTES, PredictionTrack

HYPO_LIMIT = 70.0
HYPER_LIMIT = 180.0

LOG = logging.getLogger(__name__)


class PZone(NamedEnum):
    A = 0
    B = 1
    C = 2
    D = 3
    E = 4


class RZone(NamedEnum):
    A = 0
    B = 1
    uC = 2
    lC = 3
    uD = 4
    lD = 5
    uE = 6
    lE = 7


class Region(NamedEnum):
    hypo = 0
    eu = 1
    hyper = 2


class Label(NamedEnum):
    AP = 0
    BE = 1
    EP = 2


AP, BE, EP = Label.AP, Label.BE, Label.EP

# Combination matrices, one row per point zone, one column per rate zone.
# Rate errors count against the direction that hides the dangerous trend:
# overestimated rates (u*) in hypoglycemia, underestimated rates (l*) in
# hyperglycemia.
RATE_COLUMNS = (RZone.A, RZone.B, RZone.uC, RZone.lC, RZone.uD, RZone.lD, RZone.uE, RZone.lE)
TABLES: Dict[Region, Dict[PZone, Tuple[Label, ...]]] = {
    Region.hypo: {
        #         A   B   uC  lC  uD  lD  uE  lE
        PZone.A: (AP, AP, BE, BE, EP, BE, EP, BE),
        PZone.B: (EP, EP, EP, EP, EP, EP, EP, EP),
        PZone.C: (EP, EP, EP, EP, EP, EP, EP, EP),
        PZone.D: (EP, EP, EP, EP, EP, EP, EP, EP),
        PZone.E: (EP, EP, EP, EP, EP, EP, EP, EP),
    },
    Region.eu: {
        #         A   B   uC  lC  uD  lD  uE  lE
        PZone.A: (AP, AP, BE, BE, BE, BE, EP, EP),
        PZone.B: (AP, AP, BE, BE, BE, BE, EP, EP),
        PZone.C: (BE, BE, BE, BE, BE, BE, EP, EP),
        PZone.D: (EP, EP, EP, EP, EP, EP, EP, EP),
        PZone.E: (EP, EP, EP, EP, EP, EP, EP, EP),
    },
    Region.hyper: {
        #         A   B   uC  lC  uD  lD  uE  lE
        PZone.A: (AP, AP, BE, BE, BE, EP, EP, EP),
        PZone.B: (AP, AP, BE, BE, BE, EP, EP, EP),
        PZone.C: (BE, BE, BE, BE, BE, EP, EP, EP),
        PZone.D: (EP, EP, EP, EP, EP, EP, EP, EP),
        PZone.E: (EP, EP, EP, EP, EP, EP, EP, EP),
    },
}

# region -> point zone -> rate zone -> label
MATRICES: Dict[Region, Dict[PZone, Dict[RZone, Label]]] = {
    region: {p_zone: dict(zip(RATE_COLUMNS, row)) for p_zone, row in table.items()}
    for region, table in TABLES.items()
}


@dataclass(frozen=True)
class CgEgaOutcome:
    position: int  # index into the track
    true: float
    pred: float
    true_rate: float
    pred_rate: float
    p_zone: PZone
    r_zone: RZone
    region: Region
    label: Label


def region_of(true: float) -> Region:
    if true < HYPO_LIMIT:
        return Region.hypo
    if true > HYPER_LIMIT:
        return Region.hyper
    return Region.eu


def _expansion(rate: float) -> float:
    magnitude = abs(rate)
    if magnitude > 2:
        return 20.0
    if magnitude > 1:
        return 10.0
    return 0.0


def point_zone(true: float, pred: float, true_rate: float) -> PZone:
    r, p = true, pred
    up = _expansion(true_rate) if true_rate > 0 else 0.0
    down = _expansion(true_rate) if true_rate < 0 else 0.0

    if (r <= 70 and p <= 70 + up) or (0.8 * r - down <= p <= 1.2 * r + up):
        return PZone.A
    if (r <= 70 and p > 180 + up) or (r > 180 and p < 70 - down):
        return PZone.E
    if (r <= 70 and 70 + up < p <= 180 + up) or (r >= 240 and 70 - down <= p <= 180 - down):
        return PZone.D
    if (70 < r <= 280 and p >= r + 110 + up) or (130 < r <= 180 and p <= 1.4 * (r - 130) - down):
        return PZone.C
    return PZone.B


def rate_zone(true_rate: float, pred_rate: float) -> RZone:  # pylint: disable=too-many-return-statements
    rr, pr = true_rate, pred_rate
    diff = pr - rr
    if abs(diff) <= 1 or abs(diff) <= 0.5 * abs(rr):
        return RZone.A
    if rr < -1 and pr > 1:
        return RZone.uE
    if rr > 1 and pr < -1:
        return RZone.lE
    if abs(pr) <= 1 and diff > 2:
        return RZone.uD
    if abs(pr) <= 1 and -diff > 2:
        return RZone.lD
    if abs(rr) <= 1 and diff > 2:
        return RZone.uC
    if abs(rr) <= 1 and -diff > 2:
        return RZone.lC
    return RZone.B


def classify_point(  # pylint: disable=too-many-arguments
    true: float, pred: float, true_rate: float, pred_rate: float, position: int = 0
) -> CgEgaOutcome:
    p_zone = point_zone(true, pred, true_rate)
    r_zone = rate_zone(true_rate, pred_rate)
    region = region_of(true)
    return CgEgaOutcome(
        position=position,
        true=true,
        pred=pred,
        true_rate=true_rate,
        pred_rate=pred_rate,
        p_zone=p_zone,
        r_zone=r_zone,
        region=region,
        label=MATRICES[region][p_zone][r_zone],
    )


@dataclass
class CgEgaResult:
    outcomes: List[CgEgaOutcome] = field(default_factory=list)
    excluded: int = 0

    def count(self, label: Label, region: Optional[Region] = None) -> int:
        return sum(
            1
            for outcome in self.outcomes
            if outcome.label == label and (region is None or outcome.region == region)
        )

    def region_total(self, region: Region) -> int:
        return sum(1 for outcome in self.outcomes if outcome.region == region)

    def percentages(self, region: Optional[Region] = None) -> Tuple[float, float, float]:
        """AP, BE and EP percentages over classified points."""
        total = len(self.outcomes) if region is None else self.region_total(region)
        if not total:
            where = "all regions" if region is None else region.name
            raise RetainDomainError(f"classified points: 0 > 0 (at {where})")
        ap, be, ep = (100.0 * self.count(label, region) / total for label in Label)
        return ap, be, ep

    @property
    def ap(self) -> float:
        return self.percentages()[0]

    @property
    def be(self) -> float:
        return self.percentages()[1]

    @property
    def ep(self) -> float:
        return self.percentages()[2]


def rates(values: np.ndarray) -> np.ndarray:
    """First differences per minute; the first point has none."""
    return np.diff(values) / PERIOD_MINUTES


def cg_ega(track: PredictionTrack) -> CgEgaResult:
    result = CgEgaResult()
    for start, stop in track.bounds():
        true = track.true[start:stop]
        pred = track.pred[start:stop]
        result.excluded += 1
        true_rates = rates(true)
        pred_rates = rates(pred)
        for i in range(1, len(true)):
            result.outcomes.append(
                classify_point(
                    float(true[i]),
                    float(pred[i]),
                    float(true_rates[i - 1]),
                    float(pred_rates[i - 1]),
                    start + i,
                )
            )
    LOG.debug(
        "Classified %d points, %d without a predecessor",
        len(result.outcomes),
        result.excluded,
    )
    return result


OUTCOME_COLUMNS = (
    "position",
    "true",
    "pred",
    "true_rate",
    "pred_rate",
    "p_zone",
    "r_zone",
    "region",
    "label",
)


def outcomes_frame(outcomes: Sequence[CgEgaOutcome]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (
                o.position,
                o.true,
                o.pred,
                o.true_rate,
                o.pred_rate,
                o.p_zone.name,
                o.r_zone.name,
                o.region.name,
                o.label.name,
            )
            for o in outcomes
        ],
        columns=list(OUTCOME_COLUMNS),
    )


def write_outcomes_csv(outcomes: Sequence[CgEgaOutcome], path: Path) -> None:
    outcomes_frame(outcomes).to_csv(path, index=False)
