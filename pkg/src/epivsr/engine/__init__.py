"""Self-contained tensor substrate: autodiff ops, AdamW, init, serialization."""

from .ops import (
    add,
    broadcast_mul,
    concat,
    conv2d_same,
    conv3d_same,
    dense,
    l1_loss,
    pool_over_axes,
    prelu,
    relu,
    reshape,
    sigmoid,
    tensor_sum,
)
from .optim import AdamW, adamw_step, glorot_fans, glorot_uniform_init
from .serialize import load_tensors, save_tensors
from .tensor import ParamStore, Tensor, astensor, backward, grad_enabled, no_grad

__all__ = [
    "AdamW",
    "ParamStore",
    "Tensor",
    "adamw_step",
    "add",
    "astensor",
    "backward",
    "broadcast_mul",
    "concat",
    "conv2d_same",
    "conv3d_same",
    "dense",
    "glorot_fans",
    "glorot_uniform_init",
    "grad_enabled",
    "l1_loss",
    "load_tensors",
    "no_grad",
    "pool_over_axes",
    "prelu",
    "relu",
    "reshape",
    "save_tensors",
    "sigmoid",
    "tensor_sum",
]
