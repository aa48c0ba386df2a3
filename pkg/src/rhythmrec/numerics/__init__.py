"""Float64 tensor engine, Adam, checkpoints and gradient checking."""

from .optim import Adam, AdamState, adam_step
from .rng import make_rng
from .tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    cross_entropy,
    dropout,
    gelu,
    layer_norm,
    matmul,
    mean_all,
    mul,
    reshape,
    sigmoid,
    softmax,
    sub,
    sum_all,
    take_rows,
    tanh,
    transpose,
)

softmax_rows = softmax

__all__ = [
    "Adam", "AdamState", "Tensor", "adam_step", "add", "as_tensor", "concat", "cross_entropy",
    "dropout", "gelu", "layer_norm", "make_rng", "matmul", "mean_all", "mul", "reshape",
    "sigmoid", "softmax", "softmax_rows", "sub", "sum_all", "take_rows", "tanh", "transpose",
]
