"""中心差分梯度校验"""
from __future__ import annotations

from typing import Callable

import numpy as np

from edaffect.core.errors import BadParams, ShapeMismatch
from edaffect.tensor.tensor import Tape, Tensor, backward


def finite_diff_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """比较解析梯度与中心差分，返回 max |a − n| / max(1, |a|)

    f 必须返回标量张量。x 的数据在检查结束后恢复原值。
    """
    if not 0 < eps <= 1e-2:
        raise BadParams(f"eps 必须在 (0, 1e-2] 内，实际 {eps}")

    x.requires_grad = True
    x.grad = None
    with Tape() as tape:
        out = f(x)
    if out.size != 1:
        raise ShapeMismatch(f"f 必须返回标量，实际形状 {out.shape}")
    if len(tape) == 0:
        analytic = np.zeros_like(x.data)
    else:
        backward(tape, out)
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
    analytic = analytic.copy()

    numeric = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    num_flat = numeric.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        plus = f(x).item()
        flat[i] = orig - eps
        minus = f(x).item()
        flat[i] = orig
        num_flat[i] = (plus - minus) / (2.0 * eps)

    x.grad = None
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max()) if err.size else 0.0
