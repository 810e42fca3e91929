"""随机梯度下降"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from edaffect.core.errors import MissingGrad
from edaffect.tensor.tensor import Tensor


def sgd_step(params: Iterable[Tensor], lr: float) -> None:
    """p ← p − lr·grad，之后把梯度清零

    任一参数缺少梯度时在修改任何参数之前抛出 MissingGrad。
    """
    params = list(params)
    for p in params:
        if p.grad is None:
            raise MissingGrad(f"参数 {p.name or p.shape} 没有梯度")
    for p in params:
        if lr != 0.0:
            p.data -= lr * p.grad
        p.grad = np.zeros_like(p.data)


def learning_rate(epoch: int, lr0: float, decay: float, decay_every: int) -> float:
    """阶梯衰减: lr0 · decay^floor(epoch / decay_every)"""
    return lr0 * decay ** (epoch // decay_every)
