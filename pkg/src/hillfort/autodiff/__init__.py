from .tensor import (
    ComputationTape,
    Tensor,
    absolute,
    add,
    concat,
    einsum2,
    elu,
    exp,
    huber_unit,
    log,
    log_softmax,
    matmul,
    mul,
    neg,
    no_grad,
    relu,
    reshape,
    sigmoid,
    softmax,
    square,
    sub,
    take_action,
    tanh,
    tmean,
    tsum,
)
from .nn import dense_forward, gru_cell, make_dense, make_gru, uniform_init
from .optim import RMSProp, global_norm
from .gradcheck import grad_check
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "ComputationTape",
    "Tensor",
    "absolute",
    "add",
    "concat",
    "einsum2",
    "elu",
    "exp",
    "huber_unit",
    "log",
    "log_softmax",
    "matmul",
    "mul",
    "neg",
    "no_grad",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "square",
    "sub",
    "take_action",
    "tanh",
    "tmean",
    "tsum",
    "dense_forward",
    "gru_cell",
    "make_dense",
    "make_gru",
    "uniform_init",
    "RMSProp",
    "global_norm",
    "grad_check",
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
]
