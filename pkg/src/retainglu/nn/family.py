from typing import Any, Dict

import numpy as np
from typing_extensions import Protocol

from ..numeric import Tensor
from ..serde import Family
from .baseline import baseline_forward_batch, init_baseline
from .models import BaselineParameters, ModelDimensions, Parameters, RetainParameters
from .retain import init_retain, retain_forward_batch


class ModelFamily(Protocol):
    family: Family

    def init_params(self, dims: ModelDimensions, rng: np.random.Generator) -> Any:
        ...  # pragma: no cover

    def forward(self, params: Any, x: Tensor) -> Tensor:
        ...  # pragma: no cover


class RetainFamily:
    family = Family.retain

    def init_params(self, dims: ModelDimensions, rng: np.random.Generator) -> RetainParameters:
        return init_retain(dims, rng)

    def forward(self, params: RetainParameters, x: Tensor) -> Tensor:
        return retain_forward_batch(params, x)


class BaselineFamily:
    family = Family.lstm

    def init_params(
        self, dims: ModelDimensions, rng: np.random.Generator
    ) -> BaselineParameters:
        return init_baseline(dims, rng)

    def forward(self, params: BaselineParameters, x: Tensor) -> Tensor:
        return baseline_forward_batch(params, x)


FAMILIES: Dict[Family, ModelFamily] = {
    Family.retain: RetainFamily(),
    Family.lstm: BaselineFamily(),
}


def family_of(params: Parameters) -> ModelFamily:
    if isinstance(params, RetainParameters):
        return FAMILIES[Family.retain]
    return FAMILIES[Family.lstm]
