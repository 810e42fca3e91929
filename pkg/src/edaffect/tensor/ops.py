"""
网络所需的全部算子及其伴随(反向)规则

除偏置加法外不做广播，形状不匹配一律抛 ShapeMismatch。
卷积是互相关(不翻转卷积核)。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from edaffect.core.errors import BadLabel, NotNormalized, ShapeMismatch
from edaffect.tensor.tensor import Tensor, make_output

ACTIVATIONS = ("relu", "sigmoid", "softmax_lastdim")
PROB_CLAMP = 1e-12


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ShapeMismatch(message)


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


# ---------------------------------------------------------------- 卷积与池化

def conv1d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """一维互相关，零填充

    x: [B, Cin, L]，w: [Cout, Cin, K]，b: [Cout]
    输出长度 L' = floor((L + 2·pad − K) / stride) + 1
    """
    _require(x.ndim == 3 and w.ndim == 3, f"conv1d 期望 3 维输入与权重，实际 {x.shape} / {w.shape}")
    batch, cin, length = x.shape
    cout, cin_w, k = w.shape
    _require(cin == cin_w, f"conv1d 输入通道 {cin} 与权重通道 {cin_w} 不一致")
    _require(stride >= 1 and pad >= 0, f"conv1d stride={stride} pad={pad} 非法")
    _require(k <= length + 2 * pad, f"conv1d 卷积核 {k} 大于填充后长度 {length + 2 * pad}")
    if b is not None:
        _require(b.shape == (cout,), f"conv1d 偏置形状 {b.shape} 应为 ({cout},)")

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad))) if pad else x.data
    lout = (length + 2 * pad - k) // stride + 1
    span = stride * (lout - 1) + 1
    out = np.zeros((batch, cout, lout))
    for j in range(k):
        out += np.matmul(w.data[:, :, j], xp[:, :, j:j + span:stride])
    if b is not None:
        out += b.data[None, :, None]

    def rule(g: np.ndarray):
        gx = gw = gb = None
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for j in range(k):
                gxp[:, :, j:j + span:stride] += np.matmul(w.data[:, :, j].T, g)
            gx = gxp[:, :, pad:pad + length]
        if w.requires_grad:
            gw = np.empty_like(w.data)
            for j in range(k):
                gw[:, :, j] = np.tensordot(g, xp[:, :, j:j + span:stride], axes=([0, 2], [0, 2]))
        if b is not None and b.requires_grad:
            gb = g.sum(axis=(0, 2))
        return gx, gw, gb

    inputs = (x, w) if b is None else (x, w, b)
    return make_output("conv1d", out, inputs, rule)


def avgpool1d(x: Tensor, kernel: int, stride: int) -> Tensor:
    """窗口均值池化; kernel = L 时即全局平均池化"""
    _require(x.ndim == 3, f"avgpool1d 期望 [B, C, L]，实际 {x.shape}")
    length = x.shape[2]
    _require(kernel >= 1 and stride >= 1, f"avgpool1d kernel={kernel} stride={stride} 非法")
    _require(kernel <= length, f"avgpool1d kernel={kernel} 大于长度 {length}")
    lout = (length - kernel) // stride + 1
    span = stride * (lout - 1) + 1
    if lout == 1:
        out = x.data[:, :, :kernel].mean(axis=2, keepdims=True)
    else:
        out = sliding_window_view(x.data, kernel, axis=2)[:, :, ::stride].mean(axis=-1)

    def rule(g: np.ndarray):
        gx = np.zeros_like(x.data)
        if lout == 1:
            gx[:, :, :kernel] = g / kernel
        else:
            for j in range(kernel):
                gx[:, :, j:j + span:stride] += g / kernel
        return (gx,)

    return make_output("avgpool1d", out, (x,), rule)


# ---------------------------------------------------------------- 归一化

@dataclass
class RunningStats:
    """批归一化的滑动均值/方差(按通道)"""
    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def fresh(cls, channels: int) -> "RunningStats":
        return cls(np.zeros(channels), np.ones(channels))

    def copy(self) -> "RunningStats":
        return RunningStats(self.mean.copy(), self.var.copy())


def batchnorm1d(x: Tensor, gamma: Tensor, beta: Tensor, stats: RunningStats | None,
                training: bool = True, momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """按通道在 (B, L) 上归一化

    训练模式用批统计量并以指数滑动平均更新 stats(方差用无偏估计);
    推理模式直接使用 stats。输出 = gamma·x̂ + beta。
    """
    _require(x.ndim == 3, f"batchnorm1d 期望 [B, C, L]，实际 {x.shape}")
    batch, channels, length = x.shape
    _require(gamma.shape == (channels,) and beta.shape == (channels,),
             f"batchnorm1d gamma/beta 形状应为 ({channels},)")
    _require(batch * length >= 1, "batchnorm1d 需要至少一个元素")
    _require(eps >= 0, f"batchnorm1d eps={eps} 不能为负")
    n = batch * length

    if training:
        mean = x.data.mean(axis=(0, 2))
        var = x.data.var(axis=(0, 2))
        if stats is not None:
            unbiased = var * n / (n - 1) if n > 1 else var
            stats.mean = (1.0 - momentum) * stats.mean + momentum * mean
            stats.var = (1.0 - momentum) * stats.var + momentum * unbiased
    else:
        _require(stats is not None, "推理模式的 batchnorm1d 需要 running stats")
        mean, var = stats.mean, stats.var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean[None, :, None]) * inv_std[None, :, None]
    out = gamma.data[None, :, None] * xhat + beta.data[None, :, None]

    def rule(g: np.ndarray):
        gx = None
        if x.requires_grad:
            dxhat = g * gamma.data[None, :, None]
            if training:
                gx = (inv_std / n)[None, :, None] * (
                    n * dxhat
                    - dxhat.sum(axis=(0, 2), keepdims=True)
                    - xhat * (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
                )
            else:
                gx = dxhat * inv_std[None, :, None]
        ggamma = (g * xhat).sum(axis=(0, 2)) if gamma.requires_grad else None
        gbeta = g.sum(axis=(0, 2)) if beta.requires_grad else None
        return gx, ggamma, gbeta

    return make_output("batchnorm1d", out, (x, gamma, beta), rule)


# ---------------------------------------------------------------- 线性层

def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x·w + b，x: [B, F]，w: [F, G]，b: [G]"""
    _require(x.ndim == 2 and w.ndim == 2, f"dense 期望二维输入，实际 {x.shape} / {w.shape}")
    _require(x.shape[1] == w.shape[0], f"dense 内维不匹配: {x.shape} · {w.shape}")
    _require(b.shape == (w.shape[1],), f"dense 偏置形状 {b.shape} 应为 ({w.shape[1]},)")
    out = x.data @ w.data + b.data[None, :]

    def rule(g: np.ndarray):
        gx = g @ w.data.T if x.requires_grad else None
        gw = x.data.T @ g if w.requires_grad else None
        gb = g.sum(axis=0) if b.requires_grad else None
        return gx, gw, gb

    return make_output("dense", out, (x, w, b), rule)


def matmul_batched(a: Tensor, b: Tensor) -> Tensor:
    """逐批矩阵乘: [B, M, K] · [B, K, N] → [B, M, N]"""
    _require(a.ndim == 3 and b.ndim == 3, f"matmul_batched 期望三维输入，实际 {a.shape} / {b.shape}")
    _require(a.shape[0] == b.shape[0] and a.shape[2] == b.shape[1],
             f"matmul_batched 维度不匹配: {a.shape} · {b.shape}")
    out = np.matmul(a.data, b.data)

    def rule(g: np.ndarray):
        ga = np.matmul(g, b.data.transpose(0, 2, 1)) if a.requires_grad else None
        gb = np.matmul(a.data.transpose(0, 2, 1), g) if b.requires_grad else None
        return ga, gb

    return make_output("matmul_batched", out, (a, b), rule)


# ---------------------------------------------------------------- 激活

def activation(x: Tensor, kind: str) -> Tensor:
    """relu / sigmoid / softmax_lastdim(减最大值的稳定形式)"""
    if kind == "relu":
        out = np.maximum(x.data, 0.0)
        mask = x.data > 0

        def rule(g: np.ndarray):
            return (g * mask,)
    elif kind == "sigmoid":
        out = special.expit(x.data)

        def rule(g: np.ndarray):
            return (g * out * (1.0 - out),)
    elif kind == "softmax_lastdim":
        _require(x.ndim >= 1 and x.shape[-1] >= 1, "softmax 最后一维至少为 1")
        out = special.softmax(x.data, axis=-1)

        def rule(g: np.ndarray):
            return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)
    else:
        raise ShapeMismatch(f"未知激活函数: {kind}")
    return make_output(kind, out, (x,), rule)


def relu(x: Tensor) -> Tensor:
    return activation(x, "relu")


def sigmoid(x: Tensor) -> Tensor:
    return activation(x, "sigmoid")


def softmax(x: Tensor) -> Tensor:
    return activation(x, "softmax_lastdim")


# ---------------------------------------------------------------- 形状与逐元素

def concat(parts: Sequence[Tensor], dim: int) -> Tensor:
    _require(len(parts) >= 1, "concat 至少需要一个输入")
    ndim = parts[0].ndim
    axis = dim if dim >= 0 else ndim + dim
    _require(0 <= axis < ndim, f"concat 维度 {dim} 越界")
    ref = parts[0].shape
    for p in parts[1:]:
        _require(p.ndim == ndim and all(p.shape[i] == ref[i] for i in range(ndim) if i != axis),
                 f"concat 形状不兼容: {ref} 与 {p.shape}")
    out = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def rule(g: np.ndarray):
        return tuple(np.split(g, offsets, axis=axis))

    return make_output("concat", out, tuple(parts), rule)


def add(a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"add 形状不一致: {a.shape} 与 {b.shape}")

    def rule(g: np.ndarray):
        return g, g

    return make_output("add", a.data + b.data, (a, b), rule)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"mul 形状不一致: {a.shape} 与 {b.shape}")

    def rule(g: np.ndarray):
        return g * b.data, g * a.data

    return make_output("mul", a.data * b.data, (a, b), rule)


def scale(x: Tensor, factor: float) -> Tensor:
    def rule(g: np.ndarray):
        return (g * factor,)

    return make_output("scale", x.data * factor, (x,), rule)


def sum_all(x: Tensor) -> Tensor:
    def rule(g: np.ndarray):
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_output("sum_all", np.array(x.data.sum()), (x,), rule)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    out = x.data.reshape(tuple(shape))

    def rule(g: np.ndarray):
        return (g.reshape(x.shape),)

    return make_output("reshape", out, (x,), rule)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def rule(g: np.ndarray):
        return (g.transpose(inverse),)

    return make_output("transpose", x.data.transpose(axes), (x,), rule)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    _require(0 <= start < stop <= x.shape[axis], f"slice_axis [{start}, {stop}) 越界")
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def rule(g: np.ndarray):
        gx = np.zeros_like(x.data)
        gx[index] = g
        return (gx,)

    return make_output("slice_axis", x.data[index].copy(), (x,), rule)


def channel_scale(x: Tensor, weights: Tensor) -> Tensor:
    """按通道缩放: x [B, C, T] × weights [B, C]，权重沿时间轴广播"""
    _require(x.ndim == 3 and weights.shape == x.shape[:2],
             f"channel_scale 形状不匹配: {x.shape} 与 {weights.shape}")

    def rule(g: np.ndarray):
        gx = g * weights.data[:, :, None] if x.requires_grad else None
        gw = (g * x.data).sum(axis=2) if weights.requires_grad else None
        return gx, gw

    return make_output("channel_scale", x.data * weights.data[:, :, None], (x, weights), rule)


# ---------------------------------------------------------------- 损失

def cross_entropy(probs: Tensor, labels) -> Tensor:
    """对已 softmax 的概率求批平均交叉熵，log 前把概率截断到 1e−12"""
    _require(probs.ndim == 2, f"cross_entropy 期望 [B, C]，实际 {probs.shape}")
    batch, classes = probs.shape
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise BadLabel(f"标签形状 {labels.shape} 应为 ({batch},)")
    if labels.size and (not np.issubdtype(labels.dtype, np.integer)
                        or labels.min() < 0 or labels.max() >= classes):
        raise BadLabel(f"标签必须是 [0, {classes}) 内的整数")
    row_sums = probs.data.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        raise NotNormalized("cross_entropy 的每一行概率之和必须为 1")

    rows = np.arange(batch)
    picked = probs.data[rows, labels]
    clamped = np.maximum(picked, PROB_CLAMP)
    loss = np.array(-np.log(clamped).mean())

    def rule(g: np.ndarray):
        gp = np.zeros_like(probs.data)
        live = picked > PROB_CLAMP
        gp[rows[live], labels[live]] = -1.0 / (batch * picked[live])
        return (gp * g,)

    return make_output("cross_entropy", loss, (probs,), rule)
