import numpy as np
import pytest
from pydantic import ValidationError

from retainglu.data import ingest_csv
from retainglu.errors import RetainContractError
from retainglu.synthetic import (
    STEPS_PER_DAY,
    SimConfig,
    glucose_response,
    kernel,
    patient_name,
    population,
    simulate,
    write_ingest_csv,
)


def test_kernel_peak():
    tau = 40.0
    assert kernel(np.array([tau * np.log(2)]), tau)[0] == pytest.approx(1.0)
    np.testing.assert_array_equal(kernel(np.array([-5.0, 0.0]), tau), [0.0, 0.0])


def test_zero_gains_give_constant_basal():
    config = SimConfig(days=2, cho_gain=0.0, insulin_gain=0.0, noise_std=0.0, basal=110.0)
    (segment,) = simulate(config).segments
    assert len(segment) == 2 * STEPS_PER_DAY
    np.testing.assert_array_equal(segment.glucose, 110.0)
    assert segment.cho.sum() > 0


def test_single_meal_response():
    config = SimConfig(days=1, cho_gain=1.0, cho_tau=45.0, noise_std=0.0)
    cho = np.zeros(200)
    cho[10] = 50.0
    glucose = glucose_response(config, cho, np.zeros(200))
    assert glucose[10] == config.basal
    peak = int(np.argmax(glucose))
    assert 10 < peak < 10 + 12
    assert glucose[peak] == pytest.approx(config.basal + 50.0, rel=0.05)
    settled = 10 + int(np.ceil(4 * config.cho_tau / 5))
    assert abs(glucose[settled] - config.basal) < 0.05 * config.basal


def test_insulin_lowers_glucose():
    config = SimConfig(days=1, insulin_gain=10.0, insulin_tau=80.0)
    insulin = np.zeros(100)
    insulin[5] = 2.0
    glucose = glucose_response(config, np.zeros(100), insulin)
    assert glucose.min() < config.basal
    assert np.all(glucose[:6] == config.basal)


def test_same_seed_is_deterministic():
    config = SimConfig(days=3, seed=7)
    first, second = simulate(config), simulate(config)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.glucose, b.glucose)
        np.testing.assert_array_equal(a.cho, b.cho)
    other = simulate(SimConfig(days=3, seed=8))
    assert not np.array_equal(first.segments[0].glucose, other.segments[0].glucose)


def test_floor_applied():
    config = SimConfig(days=2, basal=60.0, insulin_gain=80.0, floor=40.0)
    (segment,) = simulate(config).segments
    assert segment.glucose.min() == 40.0


def test_boluses_follow_carb_ratio():
    config = SimConfig(days=2, carb_ratio=10.0)
    (segment,) = simulate(config).segments
    np.testing.assert_allclose(segment.insulin, np.round(segment.cho / 10.0, 1))


def test_population():
    base = SimConfig(seed=3)
    configs = population(base, 4)
    assert [c.seed for c in configs] == [4, 5, 6, 7]
    for c in configs:
        assert 0.8 * base.cho_gain <= c.cho_gain <= 1.2 * base.cho_gain
        assert 0.8 * base.insulin_tau <= c.insulin_tau <= 1.2 * base.insulin_tau
    assert patient_name(0) == "patient01"
    with pytest.raises(RetainContractError):
        population(base, 0)


@pytest.mark.parametrize(
    "values",
    [{"days": -1}, {"basal": 0.0}, {"meal_hours": [7.0], "meal_cho": [50.0, 60.0]}, {"meal_hours": [24.0], "meal_cho": [1.0]}],
)
def test_invalid_config(values):
    with pytest.raises(ValidationError):
        SimConfig(**values)


def test_written_csv_ingests(tmp_path):
    series = simulate(SimConfig(days=1, seed=2), "patient01")
    path = tmp_path / "patient01.csv"
    write_ingest_csv(series, path)
    loaded = ingest_csv(path)
    assert loaded.patient_id == "patient01"
    assert len(loaded) == STEPS_PER_DAY
    np.testing.assert_allclose(loaded.segments[0].glucose, series.segments[0].glucose, atol=1e-3)
    np.testing.assert_allclose(loaded.segments[0].cho, series.segments[0].cho)
