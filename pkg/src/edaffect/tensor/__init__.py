"""带反向模式微分的最小张量引擎"""
from edaffect.tensor.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from edaffect.tensor.gradcheck import finite_diff_check
from edaffect.tensor.ops import (
    RunningStats,
    activation,
    add,
    avgpool1d,
    batchnorm1d,
    channel_scale,
    concat,
    conv1d,
    cross_entropy,
    dense,
    matmul_batched,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    slice_axis,
    softmax,
    sum_all,
    transpose,
)
from edaffect.tensor.optim import learning_rate, sgd_step
from edaffect.tensor.tensor import Tape, Tensor, backward

__all__ = [
    "Checkpoint",
    "RunningStats",
    "Tape",
    "Tensor",
    "activation",
    "add",
    "avgpool1d",
    "backward",
    "batchnorm1d",
    "channel_scale",
    "concat",
    "conv1d",
    "cross_entropy",
    "dense",
    "finite_diff_check",
    "learning_rate",
    "load_checkpoint",
    "matmul_batched",
    "mul",
    "relu",
    "reshape",
    "save_checkpoint",
    "scale",
    "sgd_step",
    "sigmoid",
    "slice_axis",
    "softmax",
    "sum_all",
    "transpose",
]
