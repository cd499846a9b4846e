"""Central finite-difference checks for recorded computations."""
import logging
from typing import Callable, List, Sequence

import numpy as np

from .tape import GradientTape
from .tensor import Tensor

LOG = logging.getLogger(__name__)

ScalarFunction = Callable[[Sequence[Tensor]], Tensor]


def numerical_gradient(
    func: ScalarFunction, arrays: Sequence[np.ndarray], step: float = 1e-5
) -> List[np.ndarray]:
    """Estimate d(func)/d(array) for every array by central differences."""
    grads = []
    for index, array in enumerate(arrays):
        grad = np.zeros(array.shape, dtype=np.float64)
        for position in np.ndindex(*array.shape):
            values = []
            for sign in (1.0, -1.0):
                perturbed = [np.array(a, dtype=np.float64) for a in arrays]
                perturbed[index][position] += sign * step
                values.append(func([Tensor(a) for a in perturbed]).item())
            grad[position] = (values[0] - values[1]) / (2.0 * step)
        grads.append(grad)
    return grads


def analytical_gradient(
    func: ScalarFunction, arrays: Sequence[np.ndarray]
) -> List[np.ndarray]:
    leaves = [Tensor(a, requires_grad=True, dtype=np.float64) for a in arrays]
    with GradientTape() as tape:
        output = func(leaves)
    return tape.gradient(output, leaves)


def relative_error(
    analytical: np.ndarray, numerical: np.ndarray, floor: float = 1e-3
) -> float:
    if analytical.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(analytical), np.abs(numerical)), floor)
    return float(np.max(np.abs(analytical - numerical) / scale))


def gradient_check(
    func: ScalarFunction,
    arrays: Sequence[np.ndarray],
    step: float = 1e-5,
    floor: float = 1e-3,
) -> float:
    """Return the largest relative error between tape and finite differences.

    Both evaluations run in double precision. Gradients smaller than ``floor``
    are compared absolutely.
    """
    analytical = analytical_gradient(func, arrays)
    numerical = numerical_gradient(func, arrays, step)
    error = max(
        (relative_error(a, n, floor) for a, n in zip(analytical, numerical)),
        default=0.0,
    )
    LOG.debug("Gradient check over %d arrays: max relative error %.3e", len(arrays), error)
    return error
