"""
线性 SVM 基线

目标 ½‖w‖² + C·Σ max(0, 1 − yᵢ(w·xᵢ + b))，等价于 λ = 1/(C·n) 的 Pegasos 形式。
偏置作为恒为 1 的增广特征一起正则化。按固定种子的样本顺序做随机次梯度下降，
结果确定。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from loguru import logger

from edaffect.core.errors import ConfigError, EmptySet, ShapeMismatch
from edaffect.core.model import LabeledExample
from edaffect.pipeline.config import SvmConfig
from edaffect.pipeline.crossval import CrossValidationReport, FoldResult, run_folds, split_fold
from edaffect.pipeline.folds import FoldPlan
from edaffect.pipeline.metrics import MetricsReport


@dataclass
class LinearSvm:
    config: SvmConfig
    weights: np.ndarray | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LinearSvm":
        """y 取 {0, 1}，内部映射为 {−1, +1}"""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y)
        if x.ndim != 2 or x.shape[0] == 0:
            raise EmptySet("训练特征为空")
        if y.shape != (x.shape[0],):
            raise ShapeMismatch(f"标签形状 {y.shape} 与特征行数 {x.shape[0]} 不符")
        n = x.shape[0]
        xa = np.hstack([x, np.ones((n, 1))])
        signs = np.where(y == 1, 1.0, -1.0)
        lam = 1.0 / (self.config.C * n)
        rng = np.random.default_rng(self.config.seed)

        w = np.zeros(xa.shape[1])
        step = 0
        for _ in range(self.config.epochs):
            for i in rng.permutation(n):
                step += 1
                eta = 1.0 / (lam * step)
                margin = signs[i] * float(xa[i] @ w)
                w *= 1.0 - eta * lam
                if margin < 1.0:
                    w += eta * signs[i] * xa[i]
        self.weights = w
        return self

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ConfigError("SVM 尚未训练")
        x = np.asarray(x, dtype=np.float64)
        return x @ self.weights[:-1] + self.weights[-1]

    def predict(self, x: np.ndarray) -> np.ndarray:
        """得分 > 0 判为 1"""
        return (self.decision_function(x) > 0).astype(np.int64)


def baseline_features(examples: Sequence[LabeledExample], kind: str = "eda") -> np.ndarray:
    """eda: 展平的 origin+phasic+tonic; music: 刺激特征; fused: 两者拼接"""
    if not examples:
        raise EmptySet("样本集为空")
    eda = np.stack([e.channels.reshape(-1) for e in examples])
    if kind == "eda":
        return eda
    if any(e.music is None for e in examples):
        raise ConfigError(f"features={kind} 需要刺激特征")
    music = np.stack([e.music for e in examples])
    return music if kind == "music" else np.hstack([eda, music])


def svm_baseline(train_set: Sequence[LabeledExample], test_set: Sequence[LabeledExample],
                 cfg: SvmConfig | None = None, dim: str = "arousal") -> MetricsReport:
    cfg = cfg or SvmConfig()
    if not train_set or not test_set:
        raise EmptySet("训练集或测试集为空")
    y_train = np.array([e.label(dim) for e in train_set], dtype=np.int64)
    y_test = np.array([e.label(dim) for e in test_set], dtype=np.int64)
    svm = LinearSvm(cfg).fit(baseline_features(train_set, cfg.features), y_train)
    return MetricsReport.from_predictions(y_test, svm.predict(baseline_features(test_set, cfg.features)))


def svm_cross_validate(examples: Sequence[LabeledExample], plan: FoldPlan, cfg: SvmConfig | None = None,
                       dim: str = "arousal", jobs: int = 1) -> CrossValidationReport:
    """与网络相同的被试独立划分下评估 SVM 基线"""
    cfg = cfg or SvmConfig()

    def run_one(fold_id: int) -> FoldResult:
        train_set, test_set = split_fold(examples, plan, fold_id)
        report = svm_baseline(train_set, test_set, cfg, dim)
        logger.info(f"✅ SVM fold {fold_id}: acc={report.accuracy:.4f} f1={report.f1:.4f}")
        return FoldResult(fold_id, sorted(plan.folds[fold_id]), len(train_set), len(test_set), report)

    results: List[FoldResult] = run_folds(plan, run_one, jobs)
    return CrossValidationReport.of(results)
