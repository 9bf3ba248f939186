"""Dense tensors, reverse-mode differentiation and optimization."""

from sdci.tensor import ops
from sdci.tensor.ops import (
    conv1d_temporal,
    gumbel_softmax_sample,
    log_softmax_with_temperature,
    matmul,
    max_pool_time,
    one_hot,
    softmax_with_temperature,
)
from sdci.tensor.optim import AdamState, ParameterStore, adam_step, learning_rate_at
from sdci.tensor.random import RngStreams
from sdci.tensor.tensor import (
    Tape,
    TapeNode,
    Tensor,
    active_tape,
    backward,
    get_default_dtype,
    no_grad,
    parameter,
    precision,
    set_default_dtype,
)

__all__ = [
    "ops",
    "Tensor",
    "Tape",
    "TapeNode",
    "active_tape",
    "backward",
    "no_grad",
    "parameter",
    "precision",
    "get_default_dtype",
    "set_default_dtype",
    "matmul",
    "softmax_with_temperature",
    "log_softmax_with_temperature",
    "gumbel_softmax_sample",
    "conv1d_temporal",
    "max_pool_time",
    "one_hot",
    "ParameterStore",
    "AdamState",
    "adam_step",
    "learning_rate_at",
    "RngStreams",
]
