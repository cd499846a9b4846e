"""Two-level attention recurrent regressor.

Step 1 embeds every input vector, steps 2 and 3 run one attention RNN each over
the embeddings in forward time order, step 4 builds the context vector from
both attentions, and step 5 reads the prediction out of the context linearly.
"""
import logging
from dataclasses import dataclass
from typing import List, Union

import numpy as np

from ..errors import (
    RetainConsistencyError,
    RetainShapeError,
    assert_eq,
    assert_ge,
)
from ..numeric import Tensor, softmax, tanh
from .lstm import init_lstm, lstm_sequence, uniform
from .models import ForwardTrace, ModelDimensions, RetainParameters

ATTENTION_TOLERANCE = 1e-9
READOUT_TOLERANCE = 1e-12
TRACE_CHUNK = 256

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class RetainOutputs:
    embeddings: Tensor  # [..., H, m]
    alphas: Tensor  # [..., H]
    betas: Tensor  # [..., H, m]
    context: Tensor  # [..., m]
    prediction: Tensor  # [...]


def init_retain(dims: ModelDimensions, rng: np.random.Generator) -> RetainParameters:
    m, p = dims.embedding, dims.hidden
    return RetainParameters(
        W_emb=uniform(rng, (m, dims.inputs), dims.inputs),
        rnn_alpha=init_lstm(rng, m, p),
        w_alpha=uniform(rng, (p,), p),
        b_alpha=Tensor(0.0, requires_grad=True),
        rnn_beta=init_lstm(rng, m, p),
        W_beta=uniform(rng, (m, p), p),
        b_beta=Tensor(np.zeros(m), requires_grad=True),
        W=uniform(rng, (1, m), m),
        b=Tensor(0.0, requires_grad=True),
    )


def retain_outputs(params: RetainParameters, x: Tensor) -> RetainOutputs:
    """Differentiable forward pass over ``x[..., H, r]``."""
    assert_ge("input rank", 2, x.ndim, "retain", RetainShapeError)
    assert_eq("input variables", params.W_emb.shape[1], x.shape[-1], "retain", RetainShapeError)
    p = params.rnn_alpha.hidden_size

    # step 1
    v = x @ params.W_emb.T
    # step 2
    g = lstm_sequence([params.rnn_alpha], v)
    e = (g @ params.w_alpha.reshape(p, 1))[..., 0] + params.b_alpha
    alpha = softmax(e, axis=-1)
    # step 3
    h = lstm_sequence([params.rnn_beta], v)
    beta = tanh(h @ params.W_beta.T + params.b_beta)
    # step 4
    weighted = alpha.reshape(*alpha.shape, 1) * beta * v
    context = weighted.sum(axis=-2)
    # step 5
    prediction = (context @ params.W.T)[..., 0] + params.b
    return RetainOutputs(v, alpha, beta, context, prediction)


def retain_forward_batch(params: RetainParameters, x: Tensor) -> Tensor:
    return retain_outputs(params, x).prediction


def _check_trace(params: RetainParameters, trace: ForwardTrace, location: str) -> None:
    total = float(trace.alphas.sum())
    if abs(total - 1.0) > ATTENTION_TOLERANCE:
        raise RetainConsistencyError(f"attention sum: {total!r} != 1 (at {location})")
    readout = float(params.W.data[0] @ trace.context + params.b.data)
    if abs(readout - trace.prediction) > READOUT_TOLERANCE * max(1.0, abs(readout)):
        raise RetainConsistencyError(
            f"readout: {trace.prediction!r} != {readout!r} (at {location})"
        )


def retain_forward(
    params: RetainParameters, x: Union[Tensor, np.ndarray]
) -> ForwardTrace:
    """Forward pass over one ``H×r`` window, keeping every intermediate."""
    tensor = x if isinstance(x, Tensor) else Tensor(x)
    assert_eq("input rank", 2, tensor.ndim, "retain_forward", RetainShapeError)
    outputs = retain_outputs(params, tensor)
    trace = ForwardTrace(
        embeddings=outputs.embeddings.data,
        alphas=outputs.alphas.data,
        betas=outputs.betas.data,
        context=outputs.context.data,
        prediction=outputs.prediction.item(),
    )
    _check_trace(params, trace, "retain_forward")
    return trace


def retain_traces(params: RetainParameters, x: np.ndarray) -> List[ForwardTrace]:
    """Traces for every window of ``x[N, H, r]``, computed in batched chunks."""
    assert_eq("input rank", 3, x.ndim, "retain_traces", RetainShapeError)
    traces = []
    for start in range(0, len(x), TRACE_CHUNK):
        outputs = retain_outputs(params, Tensor(x[start : start + TRACE_CHUNK]))
        for i in range(outputs.prediction.shape[0]):
            trace = ForwardTrace(
                embeddings=outputs.embeddings.data[i],
                alphas=outputs.alphas.data[i],
                betas=outputs.betas.data[i],
                context=outputs.context.data[i],
                prediction=float(outputs.prediction.data[i]),
            )
            _check_trace(params, trace, f"sample {start + i}")
            traces.append(trace)
    LOG.debug("Traced %d windows", len(traces))
    return traces
