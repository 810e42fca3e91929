"""
一维 Grad-CAM

从注意力子模块的输出开始回传目标类的 logit 梯度:
    ᾱ_c = 梯度在时间上的均值
    map = relu(Σ_c ᾱ_c · A_c[t])
三个切片的特征图按时间拼接后计算，线性插值到 input_len，再做 min-max 归一化。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from edaffect.core.errors import BadLabel, UnknownLayer
from edaffect.core.model import LabeledExample, frozen_array
from edaffect.core.signal import resample_linear
from edaffect.rtcan.model import RtcanModel
from edaffect.rtcan.network import model_forward
from edaffect.tensor import ops
from edaffect.tensor.tensor import Tape, Tensor, backward

LAYERS = ("sca_out", "rnta_out", "attention_out")


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    target_class: int
    layer: str
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", frozen_array(self.weights, ndim=1))


def normalize_map(cam: np.ndarray) -> np.ndarray:
    """min-max 归一化到 [0, 1]; 全零保持全零，正常数映射为全 1"""
    cam = np.maximum(np.asarray(cam, dtype=np.float64), 0.0)
    top = cam.max() if cam.size else 0.0
    if top <= 0.0:
        return np.zeros_like(cam)
    low = cam.min()
    if top - low <= 1e-12 * top:
        return np.ones_like(cam)
    return (cam - low) / (top - low)


def gradcam_1d(model: RtcanModel, example: LabeledExample, layer: str,
               target_class: Optional[int] = None) -> SaliencyMap:
    """计算一个样本在指定注意力层上的显著性图

    Args:
        model: 已训练的模型(内部切到推理模式，结束后恢复)
        example: 单个样本
        layer: sca_out / rnta_out / attention_out
        target_class: 目标类，None 时取预测类

    Returns:
        SaliencyMap，长度为 input_len
    """
    if layer not in LAYERS:
        raise UnknownLayer(f"未知的层: {layer}，可选 {LAYERS}")
    cfg = model.config
    was_training = model.training
    model.eval()
    try:
        x = Tensor(example.channels[None, :, :])
        mf = None if example.music is None else Tensor(example.music[None, :])
        taps: dict = {}
        with Tape() as tape:
            probs = model_forward(x, mf, model, taps=taps)
            if layer not in taps:
                raise UnknownLayer(f"attention_order={cfg.attention_order} 下不存在 {layer}")
            if target_class is None:
                target_class = int(np.argmax(probs.data[0]))
            if not 0 <= target_class < cfg.num_classes:
                raise BadLabel(f"target_class={target_class} 超出 [0, {cfg.num_classes})")
            logits = taps["logits"]
            score = ops.sum_all(ops.slice_axis(logits, 1, target_class, target_class + 1))
        clips: List[Tensor] = taps[layer]
        for clip in clips:
            clip.grad = None
        backward(tape, score)
    finally:
        model.training = was_training
    # 反向传播会给参数累加梯度，这里不需要
    model.zero_grad()

    activation = np.concatenate([c.data[0] for c in clips], axis=1)
    grads = np.concatenate(
        [c.grad[0] if c.grad is not None else np.zeros_like(c.data[0]) for c in clips], axis=1
    )
    alpha = grads.mean(axis=1)
    cam = np.maximum(alpha @ activation, 0.0)
    upsampled = resample_linear(cam, cfg.input_len) if cam.shape[0] >= 2 else np.full(cfg.input_len, cam[0])
    return SaliencyMap(int(target_class), layer, normalize_map(upsampled))
