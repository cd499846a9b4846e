from .baseline import baseline_forward_batch, baseline_lstm_forward, init_baseline
from .family import FAMILIES, BaselineFamily, ModelFamily, RetainFamily, family_of
from .lstm import init_lstm, lstm_sequence, lstm_step, zero_state
from .models import (
    BaselineParameters,
    ForwardTrace,
    LstmParameters,
    LstmState,
    ModelDimensions,
    Parameters,
    RetainParameters,
    named_tensors,
    tensors,
    with_arrays,
    with_tensors,
)
from .retain import init_retain, retain_forward, retain_forward_batch, retain_traces
from .weights import SavedModel, load_model, save_model

__all__ = [
    "FAMILIES",
    "BaselineFamily",
    "BaselineParameters",
    "ForwardTrace",
    "LstmParameters",
    "LstmState",
    "ModelDimensions",
    "ModelFamily",
    "Parameters",
    "RetainFamily",
    "RetainParameters",
    "SavedModel",
    "baseline_forward_batch",
    "baseline_lstm_forward",
    "family_of",
    "init_baseline",
    "init_lstm",
    "init_retain",
    "load_model",
    "lstm_sequence",
    "lstm_step",
    "named_tensors",
    "retain_forward",
    "retain_forward_batch",
    "retain_traces",
    "save_model",
    "tensors",
    "with_arrays",
    "with_tensors",
    "zero_state",
]
