"""
领域类型

所有记录在构造后不可变(numpy 数组被设为只读)，可以在并行 worker 之间只读共享。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from edaffect.core.errors import BadAnnotation, BadLabel, NonFinite, ShapeMismatch

ANNOTATION_MIN = 1.0
ANNOTATION_MAX = 9.0
DIMENSIONS = ("valence", "arousal")
COMPONENTS = ("origin", "phasic", "tonic")


def frozen_array(values, ndim: Optional[int] = None) -> np.ndarray:
    """复制为只读的 float64 数组"""
    arr = np.array(values, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatch(f"期望 {ndim} 维数组，实际为 {arr.ndim} 维")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class EdaTrace:
    """一个被试 × 一个刺激的原始皮肤电导记录(微西门子)

    构造时不做校验，交给 validate_trace，这样损坏的输入也能被表示并报告。
    """
    subject_id: str
    stimulus_id: str
    sampling_hz: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sampling_hz", float(self.sampling_hz))
        object.__setattr__(self, "samples", frozen_array(self.samples, ndim=1))

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_hz if self.sampling_hz > 0 else 0.0

    @property
    def key(self) -> tuple[str, str]:
        return self.subject_id, self.stimulus_id

    def with_samples(self, samples) -> "EdaTrace":
        return EdaTrace(self.subject_id, self.stimulus_id, self.sampling_hz, samples)


@dataclass(frozen=True, eq=False)
class DecomposedEda:
    """对齐的 origin/phasic/tonic 通道，外加稀疏驱动 p 与残差"""
    origin: np.ndarray
    phasic: np.ndarray
    tonic: np.ndarray
    driver: np.ndarray
    residual: np.ndarray

    def __post_init__(self):
        n = None
        for name in ("origin", "phasic", "tonic", "driver", "residual"):
            arr = frozen_array(getattr(self, name), ndim=1)
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise ShapeMismatch(f"{name} 长度 {arr.shape[0]} 与 origin 长度 {n} 不一致")
            object.__setattr__(self, name, arr)
        if np.any(self.driver < 0):
            raise ShapeMismatch("driver 必须逐元素非负")

    def channels(self) -> np.ndarray:
        """按 origin, phasic, tonic 顺序堆叠为 3×N"""
        return np.stack([self.origin, self.phasic, self.tonic])


@dataclass(frozen=True)
class AnnotationRecord:
    subject_id: str
    stimulus_id: str
    valence: float
    arousal: float

    def __post_init__(self):
        for dim in DIMENSIONS:
            value = float(getattr(self, dim))
            if not np.isfinite(value) or not ANNOTATION_MIN <= value <= ANNOTATION_MAX:
                raise BadAnnotation(
                    f"{self.subject_id}/{self.stimulus_id} 的 {dim}={value} 超出 [1, 9]"
                )
            object.__setattr__(self, dim, value)

    def score(self, dim: str) -> float:
        return getattr(self, dim)


@dataclass(frozen=True)
class BinaryLabels:
    valence_class: int
    arousal_class: int

    def __post_init__(self):
        for name in ("valence_class", "arousal_class"):
            value = getattr(self, name)
            if value not in (0, 1):
                raise BadLabel(f"{name}={value} 不在 {{0, 1}} 中")
            object.__setattr__(self, name, int(value))

    def for_dim(self, dim: str) -> int:
        if dim not in DIMENSIONS:
            raise BadLabel(f"未知维度: {dim}")
        return self.valence_class if dim == "valence" else self.arousal_class


@dataclass(frozen=True, eq=False)
class StimulusFeatures:
    """外部刺激(音乐)的预计算特征向量"""
    stimulus_id: str
    vector: np.ndarray

    def __post_init__(self):
        vec = frozen_array(self.vector, ndim=1)
        if not np.all(np.isfinite(vec)):
            raise NonFinite(f"刺激 {self.stimulus_id} 的特征含有非有限值")
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True, eq=False)
class LabeledExample:
    """网络输入样本: 3×L 通道矩阵 + 可选刺激特征 + 二分类标签"""
    channels: np.ndarray
    labels: BinaryLabels
    subject_id: str
    stimulus_id: str = ""
    music: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        chans = frozen_array(self.channels, ndim=2)
        if chans.shape[0] != len(COMPONENTS):
            raise ShapeMismatch(f"样本必须恰好 3 个通道，实际 {chans.shape[0]}")
        object.__setattr__(self, "channels", chans)
        if self.music is not None:
            object.__setattr__(self, "music", frozen_array(self.music, ndim=1))

    @property
    def length(self) -> int:
        return int(self.channels.shape[1])

    def label(self, dim: str) -> int:
        return self.labels.for_dim(dim)
