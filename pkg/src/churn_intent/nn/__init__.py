"""Reverse-mode autodiff and the layer set of the churn classifier."""

from .autodiff import (
    Tensor,
    add,
    backward,
    clamp_min,
    concat,
    conv1d,
    gather_rows,
    log,
    matmul,
    mean,
    mul,
    relu,
    reshape,
    select,
    sigmoid,
    softmax,
    stack,
    tanh,
    tsum,
)
from .layers import (
    AttentionParams,
    BiGRUParams,
    DenseParams,
    GRUDirectionParams,
    attention,
    bigru,
    cross_entropy,
    dense_softmax,
    dropout,
    glorot,
    gru_step,
    init_gru_direction,
    zeros,
)
from .optim import Adam, AdamState, adam_step

__all__ = [
    "Tensor", "add", "backward", "clamp_min", "concat", "conv1d", "gather_rows",
    "log", "matmul", "mean", "mul", "relu", "reshape", "select", "sigmoid",
    "softmax", "stack", "tanh", "tsum",
    "AttentionParams", "BiGRUParams", "DenseParams", "GRUDirectionParams",
    "attention", "bigru", "cross_entropy", "dense_softmax", "dropout",
    "glorot", "gru_step", "init_gru_direction", "zeros",
    "Adam", "AdamState", "adam_step",
]
