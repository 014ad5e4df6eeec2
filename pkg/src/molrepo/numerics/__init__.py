"""Dense/sparse matrix kernels with reverse-mode differentiation and Adam."""

from .checkpoint import CorruptCheckpoint, load_params, save_params
from .optim import AdamState, adam_step
from .sparse import SparseMatrix, normalized_adjacency
from .tape import (
    ACTIVATIONS,
    Node,
    ShapeMismatch,
    activation,
    add,
    backward,
    concat_cols,
    constant,
    div,
    dropout,
    elu,
    exp,
    gather_rows,
    leaky_relu,
    log,
    matmul,
    mul,
    parameter,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    scale,
    segment_sum,
    sigmoid,
    softmax,
    softplus,
    spmm,
    sub,
    transpose,
    zero_grads,
)

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "CorruptCheckpoint",
    "Node",
    "ShapeMismatch",
    "SparseMatrix",
    "activation",
    "adam_step",
    "add",
    "backward",
    "concat_cols",
    "constant",
    "div",
    "dropout",
    "elu",
    "exp",
    "gather_rows",
    "leaky_relu",
    "load_params",
    "log",
    "matmul",
    "mul",
    "normalized_adjacency",
    "parameter",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "reshape",
    "save_params",
    "scale",
    "segment_sum",
    "sigmoid",
    "softmax",
    "softplus",
    "spmm",
    "sub",
    "transpose",
    "zero_grads",
]
