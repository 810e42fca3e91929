"""
RTCAN-1D 前向计算

浅层卷积 → 三等分切片 → 共享的 SCA / RNTA 注意力 → 拼接 → 残差特征提取 → 融合分类。

taps 参数是可选的字典，传入时记录中间结果，供 Grad-CAM 和测试使用:
    sca_out / rnta_out / attention_out / sca_weights / affinity: 每个切片一项的列表
    features: F_EF，logits: softmax 之前的分类输出
"""
from __future__ import annotations

from typing import Dict, List, Optional, Sequence

import numpy as np

from edaffect.core.errors import NotDivisible, ShapeMismatch
from edaffect.rtcan.config import RFE_LEVELS
from edaffect.rtcan.model import RtcanModel
from edaffect.tensor import ops
from edaffect.tensor.tensor import Tensor

Taps = Dict[str, object]


def _tap(taps: Optional[Taps], key: str, value) -> None:
    if taps is not None:
        taps.setdefault(key, []).append(value)


def _bn(x: Tensor, model: RtcanModel, prefix: str) -> Tensor:
    cfg = model.config
    return ops.batchnorm1d(
        x, model[f"{prefix}.gamma"], model[f"{prefix}.beta"], model.stats[prefix],
        training=model.training, momentum=cfg.bn_momentum, eps=cfg.bn_eps,
    )


def shallow_feature(x: Tensor, model: RtcanModel) -> Tensor:
    """conv1d + BN + ReLU，[B, 3, L] → [B, C, L₁]"""
    cfg = model.config
    if x.ndim != 3 or x.shape[1] != 3 or x.shape[2] != cfg.input_len:
        raise ShapeMismatch(f"输入应为 [B, 3, {cfg.input_len}]，实际 {x.shape}")
    f = ops.conv1d(x, model["stem.conv.w"], model["stem.conv.b"],
                   stride=cfg.stem_stride, pad=cfg.stem_padding)
    return ops.relu(_bn(f, model, "stem.bn"))


def clip_temporal(f: Tensor, num_clips: int = 3) -> List[Tensor]:
    """沿时间轴切成连续等长的片段"""
    length = f.shape[-1]
    if length % num_clips:
        raise NotDivisible(f"长度 {length} 不能被 {num_clips} 整除")
    size = length // num_clips
    return [ops.slice_axis(f, f.ndim - 1, i * size, (i + 1) * size) for i in range(num_clips)]


def sca_forward(clip: Tensor, model: RtcanModel, prefix: str = "sca",
                taps: Optional[Taps] = None) -> Tensor:
    """通道注意力: 全局平均 → FC(C→C/r) → ReLU → FC(C/r→C) → sigmoid → 按通道缩放"""
    if clip.ndim != 3:
        raise ShapeMismatch(f"SCA 期望 [B, C, T]，实际 {clip.shape}")
    batch, channels, length = clip.shape
    if model[f"{prefix}.fc0.w"].shape[0] != channels:
        raise ShapeMismatch(f"SCA 通道 {channels} 与参数 {model[f'{prefix}.fc0.w'].shape} 不符")
    squeeze = ops.reshape(ops.avgpool1d(clip, length, length), (batch, channels))
    hidden = ops.relu(ops.dense(squeeze, model[f"{prefix}.fc0.w"], model[f"{prefix}.fc0.b"]))
    weights = ops.sigmoid(ops.dense(hidden, model[f"{prefix}.fc1.w"], model[f"{prefix}.fc1.b"]))
    if taps is not None and prefix == "sca":
        _tap(taps, "sca_weights", weights)
    return ops.channel_scale(clip, weights)


def rnta_forward(clip: Tensor, model: RtcanModel, taps: Optional[Taps] = None) -> Tensor:
    """残差非局部时间注意力

    θ/φ/g 是 C→C/2 的 1×1 卷积，φ/g 分支按 rnta_pool_stride 平均池化，
    亲和矩阵 [B, T, T'] 在 T' 上做 softmax，投影回 C 通道后经 BN 与输入相加。
    """
    cfg = model.config
    if clip.ndim != 3 or clip.shape[1] != cfg.stem_out_channels:
        raise ShapeMismatch(f"RNTA 期望 [B, {cfg.stem_out_channels}, T]，实际 {clip.shape}")
    stride = cfg.rnta_pool_stride
    if clip.shape[2] < stride:
        raise ShapeMismatch(f"切片长度 {clip.shape[2]} 小于池化步长 {stride}")

    theta = ops.conv1d(clip, model["rnta.theta.w"], model["rnta.theta.b"])
    phi = ops.avgpool1d(ops.conv1d(clip, model["rnta.phi.w"], model["rnta.phi.b"]), stride, stride)
    g = ops.avgpool1d(ops.conv1d(clip, model["rnta.g.w"], model["rnta.g.b"]), stride, stride)

    affinity = ops.softmax(ops.matmul_batched(ops.transpose(theta, (0, 2, 1)), phi))
    _tap(taps, "affinity", affinity)
    attended = ops.matmul_batched(affinity, ops.transpose(g, (0, 2, 1)))
    projected = ops.conv1d(ops.transpose(attended, (0, 2, 1)), model["rnta.out.w"], model["rnta.out.b"])
    return ops.add(_bn(projected, model, "rnta.bn"), clip)


def attention_block(clips: Sequence[Tensor], model: RtcanModel, order: Optional[str] = None,
                    taps: Optional[Taps] = None) -> Tensor:
    """按 attention_order 对每个切片施加注意力，再按顺序拼接回 [B, C, L₁]"""
    order = order or model.config.attention_order
    outputs = []
    for clip in clips:
        if order == "none":
            out = clip
        elif order == "sca_only":
            out = sca_forward(clip, model, taps=taps)
            _tap(taps, "sca_out", out)
        elif order == "rnta_only":
            out = rnta_forward(clip, model, taps)
            _tap(taps, "rnta_out", out)
        elif order == "sca_then_rnta":
            sca_out = sca_forward(clip, model, taps=taps)
            out = rnta_forward(sca_out, model, taps)
            _tap(taps, "sca_out", sca_out)
            _tap(taps, "rnta_out", out)
        elif order == "rnta_then_sca":
            rnta_out = rnta_forward(clip, model, taps)
            out = sca_forward(rnta_out, model, taps=taps)
            _tap(taps, "rnta_out", rnta_out)
            _tap(taps, "sca_out", out)
        elif order == "parallel":
            sca_out = sca_forward(clip, model, taps=taps)
            rnta_out = rnta_forward(clip, model, taps)
            out = ops.mul(clip, ops.sigmoid(ops.add(sca_out, rnta_out)))
            _tap(taps, "sca_out", sca_out)
            _tap(taps, "rnta_out", rnta_out)
        else:
            raise ShapeMismatch(f"未知的注意力排列: {order}")
        _tap(taps, "attention_out", out)
        outputs.append(out)
    return ops.concat(outputs, dim=2)


def rfe_forward(f: Tensor, model: RtcanModel) -> Tensor:
    """4 层简化残差块 + 全局平均池化 → [B, rfe_channels[-1]]"""
    cfg = model.config
    if f.ndim != 3 or f.shape[1] != cfg.stem_out_channels:
        raise ShapeMismatch(f"RFE 期望 [B, {cfg.stem_out_channels}, L], 实际 {f.shape}")
    x = f
    for level in range(RFE_LEVELS):
        stride = 1 if level == 0 else 2
        h = x
        for rep in range(cfg.rfe_depth):
            prefix = f"rfe.{level}.{rep}"
            if cfg.sca_in_resblock:
                h = sca_forward(h, model, prefix=f"{prefix}.sca")
            h = ops.conv1d(h, model[f"{prefix}.conv.w"], model[f"{prefix}.conv.b"],
                           stride=stride if rep == 0 else 1, pad=1)
            h = ops.relu(_bn(h, model, f"{prefix}.bn"))
        skip_name = f"rfe.{level}.skip"
        if f"{skip_name}.w" in model:
            skip = ops.conv1d(x, model[f"{skip_name}.w"], model[f"{skip_name}.b"], stride=stride)
        else:
            skip = x
        x = ops.add(h, skip)
    batch, channels, length = x.shape
    return ops.reshape(ops.avgpool1d(x, length, length), (batch, channels))


def classify_fused(f_ef: Tensor, f_mf: Optional[Tensor], model: RtcanModel,
                   taps: Optional[Taps] = None) -> Tensor:
    """拼接 EDA 特征与刺激特征 → 全连接(ReLU) → softmax"""
    cfg = model.config
    if cfg.music_dim > 0:
        if f_mf is None or f_mf.shape != (f_ef.shape[0], cfg.music_dim):
            got = None if f_mf is None else f_mf.shape
            raise ShapeMismatch(f"刺激特征应为 [{f_ef.shape[0]}, {cfg.music_dim}]，实际 {got}")
        h = ops.concat([f_ef, f_mf], dim=1)
    else:
        if f_mf is not None:
            raise ShapeMismatch("music_dim=0 的模型不接受刺激特征")
        h = f_ef
    n_layers = len(cfg.classifier_hidden) + 1
    for i in range(n_layers):
        h = ops.dense(h, model[f"cls.fc{i}.w"], model[f"cls.fc{i}.b"])
        if i < n_layers - 1:
            h = ops.relu(h)
    if taps is not None:
        taps["logits"] = h
    return ops.softmax(h)


def model_forward(x: Tensor, f_mf: Optional[Tensor], model: RtcanModel,
                  taps: Optional[Taps] = None) -> Tensor:
    """完整前向，返回每行和为 1 的类别概率 [B, num_classes]"""
    shallow = shallow_feature(x, model)
    clips = clip_temporal(shallow, model.config.num_clips)
    attended = attention_block(clips, model, taps=taps)
    features = rfe_forward(attended, model)
    if taps is not None:
        taps["features"] = features
    return classify_fused(features, f_mf, model, taps)


def predict_proba(model: RtcanModel, channels: np.ndarray, music: Optional[np.ndarray] = None,
                  batch_size: int = 256) -> np.ndarray:
    """推理模式下分批计算概率(不记录 Tape)"""
    was_training = model.training
    model.eval()
    try:
        out = []
        for start in range(0, channels.shape[0], batch_size):
            x = Tensor(channels[start:start + batch_size])
            mf = None if music is None else Tensor(music[start:start + batch_size])
            out.append(model_forward(x, mf, model).data)
        return np.concatenate(out, axis=0) if out else np.zeros((0, model.config.num_classes))
    finally:
        model.training = was_training
