"""Stacked LSTM regressor of matching capacity, read out from the last step."""
from typing import Union

import numpy as np

from ..errors import RetainShapeError, assert_eq, assert_ge
from ..numeric import Tensor
from .lstm import init_lstm, lstm_sequence, uniform
from .models import BaselineParameters, ModelDimensions


def init_baseline(dims: ModelDimensions, rng: np.random.Generator) -> BaselineParameters:
    m, p = dims.embedding, dims.hidden
    W_emb = uniform(rng, (m, dims.inputs), dims.inputs)
    layers = tuple(init_lstm(rng, m if i == 0 else p, p) for i in range(dims.layers))
    return BaselineParameters(
        W_emb=W_emb,
        b_emb=Tensor(np.zeros(m), requires_grad=True),
        layers=layers,
        W=uniform(rng, (1, p), p),
        b=Tensor(0.0, requires_grad=True),
    )


def baseline_forward_batch(params: BaselineParameters, x: Tensor) -> Tensor:
    """Differentiable forward pass over ``x[..., H, r]``."""
    assert_ge("input rank", 2, x.ndim, "baseline", RetainShapeError)
    assert_eq("input variables", params.W_emb.shape[1], x.shape[-1], "baseline", RetainShapeError)
    v = x @ params.W_emb.T + params.b_emb
    hidden = lstm_sequence(params.layers, v)
    last = hidden[..., -1, :]
    return (last @ params.W.T)[..., 0] + params.b


def baseline_lstm_forward(
    params: BaselineParameters, x: Union[Tensor, np.ndarray]
) -> float:
    tensor = x if isinstance(x, Tensor) else Tensor(x)
    assert_eq("input rank", 2, tensor.ndim, "baseline_lstm_forward", RetainShapeError)
    return baseline_forward_batch(params, tensor).item()
