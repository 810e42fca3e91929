"""训练与评估流程的参数"""
from __future__ import annotations

import math
from dataclasses import dataclass

from edaffect.core.errors import BadParams
from edaffect.core.model import DIMENSIONS

RELABEL_MODES = ("joint", "per_dimension")
BASELINE_FEATURES = ("eda", "music", "fused")


@dataclass(frozen=True)
class TrainSchedule:
    """SGD 训练计划: lr(e) = lr0 · decay^floor(e / decay_every)"""
    lr0: float = 1e-3
    decay: float = 0.9
    decay_every: int = 15
    batch_size: int = 256
    epochs: int = 60
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.lr0) or self.lr0 <= 0:
            raise BadParams(f"lr0 必须为正数，实际 {self.lr0}")
        if not 0 < self.decay <= 1:
            raise BadParams(f"decay 必须在 (0, 1] 内，实际 {self.decay}")
        if self.decay_every < 1 or self.batch_size < 1 or self.epochs < 0:
            raise BadParams("decay_every / batch_size 必须 ≥ 1，epochs 不能为负")


@dataclass(frozen=True)
class PipelineConfig:
    """数据整理与交叉验证参数

    Args:
        trim_s: 去掉每条记录开头的秒数
        folds: 交叉验证折数
        dim: 分类目标维度 valence / arousal
        relabel_mode: joint 为二维 k-means，per_dimension 为每个维度各自一维聚类
        subject_fraction: 参与实验的被试比例(被试递增实验)
        jobs: 并行 worker 数
        use_music: 分类器是否融合刺激特征
    """
    trim_s: float = 3.0
    folds: int = 10
    dim: str = "arousal"
    relabel_mode: str = "joint"
    subject_fraction: float = 1.0
    jobs: int = 1
    use_music: bool = False

    def __post_init__(self):
        if self.trim_s < 0:
            raise BadParams(f"trim_s 不能为负，实际 {self.trim_s}")
        if self.folds < 2:
            raise BadParams(f"folds 至少为 2，实际 {self.folds}")
        if self.dim not in DIMENSIONS:
            raise BadParams(f"dim 必须是 {DIMENSIONS} 之一，实际 {self.dim!r}")
        if self.relabel_mode not in RELABEL_MODES:
            raise BadParams(f"relabel_mode 必须是 {RELABEL_MODES} 之一，实际 {self.relabel_mode!r}")
        if not 0 < self.subject_fraction <= 1:
            raise BadParams(f"subject_fraction 必须在 (0, 1] 内，实际 {self.subject_fraction}")
        if self.jobs < 1:
            raise BadParams(f"jobs 至少为 1，实际 {self.jobs}")


@dataclass(frozen=True)
class SvmConfig:
    """线性 SVM 基线: ½‖w‖² + C·Σ hinge，次梯度下降"""
    C: float = 0.25
    epochs: int = 200
    seed: int = 0
    features: str = "eda"

    def __post_init__(self):
        if not math.isfinite(self.C) or self.C <= 0:
            raise BadParams(f"C 必须为正数，实际 {self.C}")
        if self.epochs < 1:
            raise BadParams(f"epochs 至少为 1，实际 {self.epochs}")
        if self.features not in BASELINE_FEATURES:
            raise BadParams(f"features 必须是 {BASELINE_FEATURES} 之一，实际 {self.features!r}")
