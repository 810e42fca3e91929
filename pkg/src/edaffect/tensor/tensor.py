"""
张量与反向模式微分带(Tape)

前向算子在当前活动的 Tape 上记录 (inputs, output, backward_rule)。
没有活动 Tape 时(推理)不记录任何东西。Tape 是线程局部的，
每个训练 worker 拥有自己的 Tape 与模型副本。
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from edaffect.core.errors import DetachedLoss, NonFinite, ShapeMismatch

BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_local = threading.local()


class Tensor:
    """携带形状的 float64 数组，可参与反向微分"""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatch(f"item() 只适用于单元素张量，实际形状 {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if grad.shape != self.data.shape:
            raise ShapeMismatch(f"梯度形状 {grad.shape} 与数据形状 {self.data.shape} 不一致")
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


@dataclass
class TapeRecord:
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardRule
    op: str


@dataclass
class Tape:
    """按拓扑顺序记录的运算列表

    用法::

        with Tape() as tape:
            loss = ...
        backward(tape, loss)
    """
    records: List[TapeRecord] = field(default_factory=list)

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor,
               rule: BackwardRule) -> None:
        self.records.append(TapeRecord(tuple(inputs), output, rule, op))

    def __len__(self) -> int:
        return len(self.records)


def _stack() -> List[Tape]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def active_tape() -> Optional[Tape]:
    stack = _stack()
    return stack[-1] if stack else None


def check_finite(arr: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{where} 产生了非有限值")
    return arr


def make_output(op: str, data: np.ndarray, inputs: Sequence[Tensor],
                rule: BackwardRule) -> Tensor:
    """构造算子输出，若有输入需要梯度且存在活动 Tape 则记录"""
    check_finite(data, op)
    needs = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    tape = active_tape()
    if needs and tape is not None:
        tape.record(op, inputs, out, rule)
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """从标量 loss 反向传播，按扇出累加梯度

    所有从 loss 可达且 requires_grad 的张量(包括中间结果)都会得到 grad。
    """
    if loss.size != 1:
        raise ShapeMismatch(f"loss 必须是标量，实际形状 {loss.shape}")
    if not any(rec.output is loss for rec in tape.records):
        raise DetachedLoss("loss 不在该 Tape 上")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    seen: Dict[int, Tensor] = {id(loss): loss}
    for rec in reversed(tape.records):
        g_out = grads.get(id(rec.output))
        if g_out is None:
            continue
        in_grads = rec.backward(g_out)
        for t, g in zip(rec.inputs, in_grads):
            if g is None or not t.requires_grad:
                continue
            check_finite(g, f"{rec.op}.backward")
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g
                seen[key] = t
    for key, t in seen.items():
        t.accumulate_grad(grads[key])
