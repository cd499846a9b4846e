from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

from ..errors import (
    RetainContractError,
    RetainDomainError,
    RetainShapeError,
    assert_eq,
    assert_ge,
    assert_gt,
)

PERIOD_MINUTES = 5


@dataclass(frozen=True)
class PredictionTrack:
    """True and predicted glucose in mg/dL, concatenated over contiguous
    segments; ``starts`` holds the offset of each segment."""

    true: np.ndarray
    pred: np.ndarray
    starts: Tuple[int, ...] = (0,)

    def __post_init__(self) -> None:
        assert_eq("track length", len(self.true), len(self.pred), "pred", RetainShapeError)
        assert_gt("track length", 0, len(self.true), "true", RetainContractError)
        assert_eq("first segment start", 0, self.starts[0], "starts", RetainContractError)
        for prev, start in zip(self.starts, self.starts[1:]):
            assert_gt("segment start", prev, start, "starts", RetainContractError)
        assert_gt("last segment start", self.starts[-1], len(self.true), "starts", RetainContractError)

    @classmethod
    def from_segments(cls, segments: Sequence[Tuple[np.ndarray, np.ndarray]]) -> "PredictionTrack":
        assert_gt("segment count", 0, len(segments), "from_segments", RetainContractError)
        lengths = [len(true) for true, _ in segments]
        starts = tuple(int(s) for s in np.cumsum([0] + lengths[:-1]))
        return cls(
            true=np.concatenate([np.asarray(true, dtype=np.float64) for true, _ in segments]),
            pred=np.concatenate([np.asarray(pred, dtype=np.float64) for _, pred in segments]),
            starts=starts,
        )

    def __len__(self) -> int:
        return len(self.true)

    def bounds(self) -> Iterator[Tuple[int, int]]:
        stops = self.starts[1:] + (len(self.true),)
        return zip(self.starts, stops)

    def segments(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for start, stop in self.bounds():
            yield self.true[start:stop], self.pred[start:stop]


def rmse(track: PredictionTrack) -> float:
    return float(np.sqrt(np.mean((track.pred - track.true) ** 2)))


def mape(track: PredictionTrack) -> float:
    """Mean absolute percentage error, in percent."""
    zero = track.true == 0
    if zero.any():
        index = int(np.argmax(zero))
        raise RetainDomainError(f"true glucose: 0.0 != 0 (at {index})")
    return float(np.mean(np.abs((track.pred - track.true) / track.true)) * 100.0)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    assert_eq("length", len(a), len(b), "pearson", RetainShapeError)
    assert_ge("length", 2, len(a), "pearson", RetainContractError)
    da = a - a.mean()
    db = b - b.mean()
    na = float(np.sqrt(np.dot(da, da)))
    nb = float(np.sqrt(np.dot(db, db)))
    if na == 0 or nb == 0:
        raise RetainDomainError("correlation: constant signal has zero variance (at pearson)")
    return float(np.dot(da, db) / (na * nb))


def shifted_pairs(track: PredictionTrack, shift: int) -> Tuple[np.ndarray, np.ndarray]:
    """``true[0..n-s]`` against ``pred[s..n]``, pooled over segments."""
    trues, preds = [], []
    for true, pred in track.segments():
        n = len(true)
        if n > shift:
            trues.append(true[: n - shift])
            preds.append(pred[shift:])
    if not trues:
        return np.empty(0), np.empty(0)
    return np.concatenate(trues), np.concatenate(preds)


def time_lag(track: PredictionTrack, max_shift: int) -> float:
    """Shift in minutes maximizing the correlation; ties resolve to the
    smallest shift."""
    assert_ge("max shift", 0, max_shift, "time_lag", RetainContractError)
    best_shift = 0
    best = -np.inf
    for shift in range(max_shift + 1):
        true, pred = shifted_pairs(track, shift)
        if len(true) < 2:
            raise RetainContractError(
                f"shifted length: {len(true)!r} >= 2 (at shift {shift})"
            )
        corr = pearson(true, pred)
        if corr > best:
            best = corr
            best_shift = shift
    return float(best_shift * PERIOD_MINUTES)
