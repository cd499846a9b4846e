from .gradcheck import gradient_check, numerical_gradient
from .tape import GradientTape, backward
from .tensor import (
    Tensor,
    add,
    as_tensor,
    elementwise,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    sigmoid,
    softmax,
    stack,
    sub,
    tanh,
    tensor_sum,
    transpose,
)

__all__ = [
    "GradientTape",
    "Tensor",
    "add",
    "as_tensor",
    "backward",
    "elementwise",
    "gradient_check",
    "matmul",
    "mean",
    "mul",
    "neg",
    "numerical_gradient",
    "reshape",
    "sigmoid",
    "softmax",
    "stack",
    "sub",
    "tanh",
    "tensor_sum",
    "transpose",
]
