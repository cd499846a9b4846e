import numpy as np
import pandas as pd
import pytest

from retainglu.errors import RetainConsistencyError, RetainContractError
from retainglu.interpret import (
    ContributionMap,
    ContributionSample,
    audit_decomposition,
    contribution_coefficients,
    contribution_samples,
    contributions,
    effective_history,
    event_conditioned_profile,
    event_conditioned_profiles,
    max_contribution_profile,
    mean_contribution_profile,
    no_event_profile,
    write_event_profiles_csv,
    write_profile_csv,
)
from retainglu.metrics import ModelPredictor
from retainglu.nn import (
    ModelDimensions,
    init_retain,
    retain_forward,
    retain_traces,
    tensors,
    with_arrays,
)
from retainglu.data import apply_standardizer, fit_standardizer, make_windows
from retainglu.serde import Event, Signal

from conftest import wave_series


def random_map(rng, history=4, inputs=3) -> ContributionMap:
    omega = rng.normal(size=(history, inputs))
    magnitude = np.abs(omega)
    return ContributionMap(
        omega=omega,
        bias=0.0,
        prediction=float(omega.sum()),
        omega_an=magnitude / magnitude.sum(),
    )


def sample(rng, insulin_lag=None, cho_lag=None) -> ContributionSample:
    return ContributionSample(
        contributions=random_map(rng),
        patient_id="p1",
        t_index=0,
        insulin_lag=insulin_lag,
        cho_lag=cho_lag,
    )


def test_identity_holds(tiny_dims, rng):
    params = init_retain(tiny_dims, rng)
    x = rng.normal(size=(tiny_dims.history, tiny_dims.inputs))
    trace = retain_forward(params, x)
    result = contributions(params, trace, x)
    assert result.omega.sum() + result.bias == pytest.approx(trace.prediction, abs=1e-10)
    assert result.omega_an.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(result.omega_an >= 0)


def test_identity_randomized():
    dims = ModelDimensions(inputs=3, history=4, horizon=1, embedding=2, hidden=2, layers=1)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        params = init_retain(dims, rng)
        scale = rng.uniform(0.1, 5.0)
        arrays = [t.numpy() * scale for t in tensors(params)]
        params = with_arrays(params, arrays)
        x = rng.normal(scale=3.0, size=(dims.history, dims.inputs))
        trace = retain_forward(params, x)
        result = contributions(params, trace, x)
        assert result.residual <= 1e-9


def test_zero_input_is_degenerate(tiny_dims, rng):
    params = init_retain(tiny_dims, rng)
    x = np.zeros((tiny_dims.history, tiny_dims.inputs))
    trace = retain_forward(params, x)
    result = contributions(params, trace, x)
    np.testing.assert_array_equal(result.omega, np.zeros_like(x))
    assert result.degenerate
    assert trace.prediction == pytest.approx(result.bias)


def test_single_nonzero_input(tiny_dims, rng):
    params = init_retain(tiny_dims, rng)
    x = np.zeros((tiny_dims.history, tiny_dims.inputs))
    x[2, 1] = 1.7
    trace = retain_forward(params, x)
    result = contributions(params, trace, x)
    assert trace.prediction - result.bias == pytest.approx(result.omega[2, 1], abs=1e-12)
    assert result.omega_an[2, 1] == pytest.approx(1.0)


def test_mismatched_trace_detected(tiny_dims, rng):
    params = init_retain(tiny_dims, rng)
    x = rng.normal(size=(tiny_dims.history, tiny_dims.inputs))
    trace = retain_forward(params, x)
    other = init_retain(tiny_dims, rng)
    with pytest.raises(RetainConsistencyError):
        contributions(other, trace, x)


def test_identity_at_full_size():
    dims = ModelDimensions(inputs=3, history=36, horizon=6, embedding=64, hidden=128, layers=1)
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(10):
        params = init_retain(dims, rng)
        x = rng.normal(scale=2.0, size=(100, dims.history, dims.inputs))
        for trace, window in zip(retain_traces(params, x), x):
            assert trace.alphas.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(np.abs(trace.betas) < 1.0)
            result = contributions(params, trace, window)
            assert result.omega_an.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(result.omega_an >= 0)
            worst = max(worst, result.residual)
    assert worst < 1e-9


def test_omega_scales_with_input_at_fixed_attention(tiny_dims, rng):
    params = init_retain(tiny_dims, rng)
    x = rng.normal(size=(tiny_dims.history, tiny_dims.inputs))
    trace = retain_forward(params, x)
    coefficients = contribution_coefficients(params, trace)
    omega = contributions(params, trace, x).omega
    np.testing.assert_allclose(omega, coefficients * x, rtol=1e-15)

    doubled = x.copy()
    doubled[1, 2] *= 2.0
    changed = coefficients * doubled
    assert changed[1, 2] == pytest.approx(2.0 * omega[1, 2], rel=1e-15)
    changed[1, 2] = omega[1, 2]
    np.testing.assert_array_equal(changed, omega)


def test_contributions_sum_to_prediction_in_mg_dl(tiny_dims, rng):
    windows = make_windows(wave_series("p1", steps=40), tiny_dims)
    standardizer = fit_standardizer(windows)
    windows = apply_standardizer(windows, standardizer)
    params = init_retain(tiny_dims, rng)
    samples = contribution_samples(params, windows)
    pred = ModelPredictor(params).predict(windows)
    for s, expected in zip(samples, pred):
        m = s.contributions
        assert m.omega.sum() + m.bias == pytest.approx(expected, rel=1e-9)
        assert m.prediction == pytest.approx(expected, rel=1e-12)

    trace = retain_forward(params, windows[0].x)
    scaled = contributions(params, trace, windows[0].x)
    in_mg_dl = contributions(params, trace, windows[0].x, standardizer)
    glucose_std = standardizer.std[Signal.glucose.value]
    np.testing.assert_allclose(in_mg_dl.omega, glucose_std * scaled.omega, rtol=1e-12)
    np.testing.assert_allclose(in_mg_dl.omega_an, scaled.omega_an, rtol=1e-12)


def test_max_profile_single_sample(rng):
    m = random_map(rng)
    profile = max_contribution_profile([m])
    np.testing.assert_array_equal(profile.values, m.omega_an)
    assert profile.count == 1


def test_max_profile_brute_force(rng):
    maps = [random_map(rng) for _ in range(100)]
    profile = max_contribution_profile(maps)
    expected = np.zeros((4, 3))
    for m in maps:
        for i in range(4):
            for j in range(3):
                expected[i, j] = max(expected[i, j], m.omega_an[i, j])
    np.testing.assert_array_equal(profile.values, expected)


def test_profiles_skip_degenerate(rng):
    m = random_map(rng)
    empty = ContributionMap(omega=np.zeros((4, 3)), bias=1.0, prediction=1.0, omega_an=None)
    profile = mean_contribution_profile([m, empty])
    assert profile.count == 1
    np.testing.assert_allclose(profile.values, m.omega_an)


def test_profile_empty_set():
    with pytest.raises(RetainContractError):
        max_contribution_profile([])


def test_event_profile_lag_zero(rng):
    samples = [sample(rng, cho_lag=0) for _ in range(5)]
    profiles = event_conditioned_profiles(samples, Event.cho)
    expected = np.mean([s.contributions.omega_an for s in samples], axis=0)
    np.testing.assert_allclose(profiles[0].values, expected)
    assert profiles[0].count == 5
    assert all(profile.count == 0 and profile.values is None for profile in profiles[1:])


def test_event_profile_brute_force_grouping(rng):
    samples = [
        sample(rng, insulin_lag=int(rng.integers(0, 4)), cho_lag=int(rng.integers(0, 4)))
        for _ in range(60)
    ]
    for event in Event:
        for lag in range(4):
            group = [s.contributions.omega_an for s in samples if s.event_lag(event) == lag]
            profile = event_conditioned_profile(samples, event, lag)
            assert profile.count == len(group)
            if group:
                np.testing.assert_allclose(profile.values, np.mean(group, axis=0))


def test_event_profile_lag_out_of_range(rng):
    with pytest.raises(RetainContractError):
        event_conditioned_profile([sample(rng)], Event.insulin, 4)


def test_no_event_profile(rng):
    quiet = [sample(rng) for _ in range(3)]
    old = [sample(rng, insulin_lag=3) for _ in range(2)]
    recent = [sample(rng, cho_lag=1) for _ in range(4)]
    profile = no_event_profile(quiet + old + recent, window=2)
    expected = np.mean([s.contributions.omega_an for s in quiet + old], axis=0)
    assert profile.count == 5
    np.testing.assert_allclose(profile.values, expected)

    assert no_event_profile(recent, window=2).count == 0


def test_no_event_profile_all_quiet_is_global_mean(rng):
    samples = [sample(rng) for _ in range(6)]
    np.testing.assert_allclose(
        no_event_profile(samples).values,
        mean_contribution_profile([s.contributions for s in samples]).values,
    )


def test_effective_history(rng):
    values = np.zeros((4, 3))
    values[1, Signal.glucose.value] = 0.2
    values[3, Signal.glucose.value] = 0.5
    values[3, Signal.insulin.value] = 0.06
    m = ContributionMap(omega=values, bias=0.0, prediction=values.sum(), omega_an=values)
    result = effective_history(max_contribution_profile([m]), 0.05)
    assert result == {Signal.glucose: -10, Signal.insulin: 0, Signal.cho: None}


def test_samples_from_windows(tiny_dims, rng):
    windows = make_windows(wave_series("p1", steps=40), tiny_dims)
    windows = apply_standardizer(windows, fit_standardizer(windows))
    params = init_retain(tiny_dims, rng)
    samples = contribution_samples(params, windows)
    assert len(samples) == len(windows)
    assert audit_decomposition(samples) <= 1e-9
    assert [s.t_index for s in samples] == [w.t_index for w in windows]


def test_profile_csv_layout(rng, tmp_path):
    profile = max_contribution_profile([random_map(rng)])
    path = tmp_path / "max.csv"
    write_profile_csv(profile, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["signal", "offset_min", "value", "count"]
    assert len(frame) == 12
    assert list(frame["offset_min"][:4]) == [-15, -10, -5, 0]

    samples = [sample(rng, insulin_lag=1) for _ in range(2)]
    path = tmp_path / "event_insulin.csv"
    write_event_profiles_csv(event_conditioned_profiles(samples, Event.insulin), path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["lag_min", "signal", "offset_min", "value", "count"]
    assert sorted(frame["lag_min"].unique()) == [0, 5, 10, 15]
    assert set(frame[frame["lag_min"] == 5]["count"]) == {2}
