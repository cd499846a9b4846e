from dataclasses import replace
from typing import List

import numpy as np
import pytest
from pydantic import ValidationError

from retainglu.data import SampleWindow, StandardizationParams, stack_inputs
from retainglu.errors import RetainContractError
from retainglu.nn import (
    ModelDimensions,
    init_retain,
    retain_forward,
    retain_forward_batch,
    tensors,
    with_tensors,
)
from retainglu.numeric import Tensor, gradient_check
from retainglu.serde import Family
from retainglu.train import (
    Adam,
    TrainConfig,
    evaluate_mse,
    grid_cells,
    grid_search,
    mse_loss,
    scaled_targets,
    train,
    train_step,
)

IDENTITY = StandardizationParams(mean=[0.0, 0.0, 0.0], std=[1.0, 1.0, 1.0], count=1, fit_digest="toy")


def toy_windows(rng, count, history=4, noise=0.05) -> List[SampleWindow]:
    """Constant glucose history u with target 2u plus noise."""
    windows = []
    for i in range(count):
        u = rng.normal()
        x = np.zeros((history, 3))
        x[:, 0] = u
        windows.append(
            SampleWindow(
                x=x,
                y=2.0 * u + rng.normal(scale=noise),
                t_index=i,
                patient_id="toy",
                segment_id=0,
                insulin_lag=None,
                cho_lag=None,
                standardizer=IDENTITY,
            )
        )
    return windows


@pytest.fixture
def toy_data(rng):
    return toy_windows(rng, 160), toy_windows(rng, 40)


def test_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(patience=10, max_epochs=10)
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValidationError):
        TrainConfig(beta1=1.0)
    assert TrainConfig(precision="single").precision.dtype == np.float32


def test_adam_first_step_moves_by_learning_rate():
    config = TrainConfig(learning_rate=0.1)
    arrays = [np.array([1.0, -1.0])]
    optimizer = Adam(arrays, config)
    (updated,) = optimizer.step(arrays, [np.array([0.5, -2.0])])
    np.testing.assert_allclose(updated, [0.9, -0.9], atol=1e-6)


def test_scaled_targets_require_standardizer(rng):
    windows = toy_windows(rng, 2)
    np.testing.assert_array_equal(scaled_targets(windows), [w.y for w in windows])
    raw = [replace(w, standardizer=None) for w in windows]
    with pytest.raises(RetainContractError):
        scaled_targets(raw)


def test_learns_linear_toy_task(tiny_dims, rng):
    noise = 0.25
    train_windows = toy_windows(rng, 400, noise=noise)
    valid_windows = toy_windows(rng, 200, noise=noise)
    config = TrainConfig(learning_rate=0.01, batch_size=32, patience=30, max_epochs=200, seed=3)
    params, report = train(Family.retain, tiny_dims, train_windows, valid_windows, config)
    assert np.sqrt(report.best_valid_mse) < 1.5 * noise
    assert report.epochs[0].valid_mse > report.best_valid_mse
    assert report.best_valid_mse == min(record.valid_mse for record in report.epochs)
    # the best epoch's parameters are returned
    z_valid = scaled_targets(valid_windows)
    assert evaluate_mse(params, stack_inputs(valid_windows), z_valid) == pytest.approx(
        report.best_valid_mse, rel=1e-12
    )


def test_patience_zero_stops_after_first_non_improving_epoch(tiny_dims, toy_data):
    train_windows, valid_windows = toy_data
    # updates below float resolution leave the validation MSE unchanged
    config = TrainConfig(learning_rate=1e-300, batch_size=16, patience=0, max_epochs=40)
    _, report = train(Family.retain, tiny_dims, train_windows, valid_windows, config)
    assert report.best_epoch == 1
    assert report.stopped_epoch == 2
    assert len(report.epochs) == 2
    assert report.epochs[1].valid_mse == report.epochs[0].valid_mse


def test_one_window_batch(tiny_dims, rng):
    params = init_retain(tiny_dims, rng)
    windows = toy_windows(rng, 1)
    x, z = stack_inputs(windows), scaled_targets(windows)
    pred = retain_forward_batch(params, Tensor(x))
    loss = mse_loss(pred, z)
    assert loss.shape == ()
    assert loss.item() == pytest.approx((pred.numpy()[0] - z[0]) ** 2, rel=1e-12)
    assert retain_forward(params, x[0]).prediction == pytest.approx(pred.numpy()[0], abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_small_adam_step_lowers_single_sample_loss(tiny_dims, seed):
    rng = np.random.default_rng(seed)
    params = init_retain(tiny_dims, rng)
    x = stack_inputs(toy_windows(rng, 1))
    start = float(retain_forward_batch(params, Tensor(x)).numpy()[0])
    z = np.array([start + rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)])
    optimizer = Adam([t.numpy() for t in tensors(params)], TrainConfig(learning_rate=1e-4))
    updated, before = train_step(params, optimizer, x, z)
    assert before == pytest.approx(evaluate_mse(params, x, z), rel=1e-12)
    assert evaluate_mse(updated, x, z) < before


@pytest.mark.parametrize("family", [Family.retain, Family.lstm])
def test_identical_seeds_are_deterministic(family, tiny_dims, toy_data):
    train_windows, valid_windows = toy_data
    config = TrainConfig(learning_rate=0.01, batch_size=50, patience=2, max_epochs=5, seed=11)
    first, first_report = train(family, tiny_dims, train_windows, valid_windows, config)
    second, second_report = train(family, tiny_dims, train_windows, valid_windows, config)
    assert first_report.epochs == second_report.epochs
    for a, b in zip(tensors(first), tensors(second)):
        np.testing.assert_array_equal(a.numpy(), b.numpy())


def test_single_precision(tiny_dims, toy_data):
    train_windows, valid_windows = toy_data
    config = TrainConfig(batch_size=80, patience=1, max_epochs=2, precision="single")
    params, _ = train(Family.retain, tiny_dims, train_windows, valid_windows, config)
    assert {t.dtype for t in tensors(params)} == {np.dtype(np.float32)}


def test_empty_sets_rejected(tiny_dims, toy_data):
    train_windows, _ = toy_data
    with pytest.raises(RetainContractError):
        train(Family.retain, tiny_dims, train_windows, [], TrainConfig(max_epochs=2, patience=1))


def test_grid_cells_order():
    cells = grid_cells({"learning_rate": [0.1, 0.01], "batch_size": [8, 4]})
    assert cells == [
        {"batch_size": 8, "learning_rate": 0.1},
        {"batch_size": 8, "learning_rate": 0.01},
        {"batch_size": 4, "learning_rate": 0.1},
        {"batch_size": 4, "learning_rate": 0.01},
    ]


@pytest.mark.parametrize(
    "grid", [{}, {"learning_rate": []}, {"momentum": [0.9]}, {"history": [4, 6]}, {"inputs": [2]}]
)
def test_grid_cells_invalid(grid):
    with pytest.raises(RetainContractError):
        grid_cells(grid)


def grid_config():
    return TrainConfig(learning_rate=0.01, batch_size=40, patience=3, max_epochs=15, seed=5)


def test_grid_single_cell(tiny_dims, toy_data):
    result = grid_search(Family.retain, tiny_dims, {"batch_size": [40]}, [toy_data], grid_config())
    assert result.best == {"batch_size": 40}
    assert len(result.cells) == 1
    assert len(result.cells[0].scores) == 1


def test_grid_picks_separated_cell(tiny_dims, toy_data):
    grid = {"learning_rate": [1e-9, 0.02]}
    result = grid_search(Family.retain, tiny_dims, grid, [toy_data, toy_data], grid_config())
    assert result.best == {"learning_rate": 0.02}
    assert result.cells[1].mean_rmse < result.cells[0].mean_rmse


def test_grid_tie_keeps_first_cell(tiny_dims, toy_data):
    # the RETAIN family ignores the baseline layer count
    result = grid_search(Family.retain, tiny_dims, {"layers": [3, 1]}, [toy_data], grid_config())
    assert result.cells[0].mean_rmse == result.cells[1].mean_rmse
    assert result.best == {"layers": 3}


@pytest.mark.parametrize("seed", range(20))
def test_retain_loss_gradients_match_finite_differences(seed):
    dims = ModelDimensions(inputs=3, history=4, horizon=1, embedding=2, hidden=3, layers=1)
    rng = np.random.default_rng(seed)
    template = init_retain(dims, rng)
    x = rng.normal(size=(3, dims.history, dims.inputs))
    z = rng.normal(size=3)

    def func(args):
        params = with_tensors(template, args)
        return mse_loss(retain_forward_batch(params, Tensor(x)), z)

    assert gradient_check(func, [t.numpy() for t in tensors(template)]) < 1e-6
