"""LSTM cell and forward-order unrolling.

Backpropagation through time falls out of the gradient tape: unrolling records
every step, and replaying the tape walks the steps in reverse.
"""
import logging
from typing import Sequence, Tuple

import numpy as np

from ..errors import RetainShapeError, assert_eq, assert_ge
from ..numeric import Tensor, sigmoid, stack, tanh
from .models import LstmParameters, LstmState

FORGET_BIAS = 1.0

LOG = logging.getLogger(__name__)


def uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def init_lstm(rng: np.random.Generator, input_size: int, hidden_size: int) -> LstmParameters:
    bias = np.zeros(4 * hidden_size)
    bias[hidden_size : 2 * hidden_size] = FORGET_BIAS
    return LstmParameters(
        W=uniform(rng, (4 * hidden_size, input_size), input_size),
        U=uniform(rng, (4 * hidden_size, hidden_size), hidden_size),
        b=Tensor(bias, requires_grad=True),
    )


def zero_state(params: LstmParameters, batch_shape: Tuple[int, ...] = ()) -> LstmState:
    shape = batch_shape + (params.hidden_size,)
    dtype = params.W.dtype
    return LstmState(h=Tensor(np.zeros(shape, dtype)), c=Tensor(np.zeros(shape, dtype)))


def _gates(z: Tensor, state: LstmState, hidden: int) -> LstmState:
    i = sigmoid(z[..., 0:hidden])
    f = sigmoid(z[..., hidden : 2 * hidden])
    g = tanh(z[..., 2 * hidden : 3 * hidden])
    o = sigmoid(z[..., 3 * hidden :])
    c = f * state.c + i * g
    return LstmState(h=o * tanh(c), c=c)


def lstm_step(params: LstmParameters, state: LstmState, x: Tensor) -> LstmState:
    """One LSTM update; ``x`` may carry leading batch axes."""
    assert_eq("LSTM input size", params.input_size, x.shape[-1], "lstm_step", RetainShapeError)
    assert_eq("LSTM state shape", state.h.shape, state.c.shape, "lstm_step", RetainShapeError)
    assert_eq(
        "LSTM state size", params.hidden_size, state.h.shape[-1], "lstm_step", RetainShapeError
    )
    z = x @ params.W.T + state.h @ params.U.T + params.b
    return _gates(z, state, params.hidden_size)


def _unroll(params: LstmParameters, xs: Tensor) -> Tensor:
    steps = xs.shape[-2]
    state = zero_state(params, xs.shape[:-2])
    hidden = params.hidden_size
    # input projections of every step in one product
    projected = xs @ params.W.T + params.b
    recurrent = params.U.T
    outputs = []
    for t in range(steps):
        z = projected[..., t, :] + state.h @ recurrent
        state = _gates(z, state, hidden)
        outputs.append(state.h)
    return stack(outputs, axis=-2)


def lstm_sequence(layers: Sequence[LstmParameters], xs: Tensor) -> Tensor:
    """Run stacked LSTM layers over ``xs[..., T, d]`` in forward time order.

    Every layer starts from a zero state. Returns the hidden states of the top
    layer for all T steps, ``[..., T, h]``.
    """
    assert_ge("LSTM layer count", 1, len(layers), "lstm_sequence", RetainShapeError)
    assert_ge("sequence rank", 2, xs.ndim, "lstm_sequence", RetainShapeError)
    assert_ge("sequence length", 1, xs.shape[-2], "lstm_sequence", RetainShapeError)
    assert_eq(
        "LSTM input size", layers[0].input_size, xs.shape[-1], "lstm_sequence", RetainShapeError
    )

    outputs = xs
    for params in layers:
        outputs = _unroll(params, outputs)
    return outputs
