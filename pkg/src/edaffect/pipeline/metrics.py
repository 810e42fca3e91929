"""二分类指标，正类为 1(高)"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from edaffect.core.errors import EmptySet, ShapeMismatch


@dataclass(frozen=True)
class MetricsReport:
    """confusion 按 sklearn 约定: 行为真实类，列为预测类 [[TN, FP], [FN, TP]]"""
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: tuple

    @classmethod
    def from_confusion(cls, confusion) -> "MetricsReport":
        cm = np.asarray(confusion, dtype=np.int64)
        if cm.shape != (2, 2):
            raise ShapeMismatch(f"混淆矩阵应为 2×2，实际 {cm.shape}")
        total = int(cm.sum())
        if total == 0:
            raise EmptySet("混淆矩阵为空")
        tn, fp, fn, tp = (int(v) for v in cm.ravel())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(
            accuracy=(tp + tn) / total,
            precision=precision,
            recall=recall,
            f1=f1,
            confusion=((tn, fp), (fn, tp)),
        )

    @classmethod
    def from_predictions(cls, truth: Sequence[int], predicted: Sequence[int]) -> "MetricsReport":
        truth = np.asarray(truth, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if truth.size == 0:
            raise EmptySet("没有可评估的样本")
        if truth.shape != predicted.shape:
            raise ShapeMismatch(f"真值 {truth.shape} 与预测 {predicted.shape} 长度不一致")
        return cls.from_confusion(confusion_matrix(truth, predicted, labels=[0, 1]))

    @property
    def support(self) -> int:
        return sum(sum(row) for row in self.confusion)

    def to_dict(self) -> Dict[str, object]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": [list(row) for row in self.confusion],
        }


@dataclass(frozen=True)
class MeanMetrics:
    """各折指标的不加权平均(f1 是各折 f1 的平均，不由平均精度/召回重新计算)"""
    accuracy: float
    precision: float
    recall: float
    f1: float

    @classmethod
    def of(cls, reports: List[MetricsReport]) -> "MeanMetrics":
        if not reports:
            raise EmptySet("没有可平均的折")
        return cls(
            accuracy=float(np.mean([r.accuracy for r in reports])),
            precision=float(np.mean([r.precision for r in reports])),
            recall=float(np.mean([r.recall for r in reports])),
            f1=float(np.mean([r.f1 for r in reports])),
        )

    def to_dict(self) -> Dict[str, float]:
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def pooled_confusion(reports: List[MetricsReport]) -> tuple:
    total = np.zeros((2, 2), dtype=np.int64)
    for r in reports:
        total += np.asarray(r.confusion, dtype=np.int64)
    return tuple(tuple(int(v) for v in row) for row in total)
