"""被试独立的 k 折交叉验证"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from loguru import logger

from edaffect.core.errors import BadParams
from edaffect.core.model import LabeledExample
from edaffect.pipeline.config import TrainSchedule
from edaffect.pipeline.folds import FoldPlan
from edaffect.pipeline.metrics import MeanMetrics, MetricsReport, pooled_confusion
from edaffect.pipeline.train import evaluate, train, warm_start
from edaffect.rtcan.config import RtcanConfig
from edaffect.rtcan.model import RtcanModel


@dataclass
class FoldResult:
    fold_id: int
    test_subjects: List[str]
    n_train: int
    n_test: int
    report: MetricsReport
    loss_history: List[float] = field(default_factory=list)
    model: Optional[RtcanModel] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "fold_id": self.fold_id,
            "test_subjects": self.test_subjects,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "metrics": self.report.to_dict(),
            "loss_history": self.loss_history,
        }


@dataclass
class CrossValidationReport:
    folds: List[FoldResult]
    mean: MeanMetrics
    pooled_confusion: tuple

    @classmethod
    def of(cls, folds: List[FoldResult]) -> "CrossValidationReport":
        folds = sorted(folds, key=lambda f: f.fold_id)
        reports = [f.report for f in folds]
        return cls(folds, MeanMetrics.of(reports), pooled_confusion(reports))

    def to_dict(self) -> Dict[str, object]:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean.to_dict(),
            "pooled_confusion": [list(row) for row in self.pooled_confusion],
        }


def split_fold(examples: Sequence[LabeledExample], plan: FoldPlan, fold_id: int):
    """按折划分训练/测试样本，训练与测试被试相交时抛 LeakageDetected"""
    plan.check_disjoint(fold_id)
    test_subjects = plan.folds[fold_id]
    train_subjects = plan.train_subjects(fold_id)
    train_set = [e for e in examples if e.subject_id in train_subjects]
    test_set = [e for e in examples if e.subject_id in test_subjects]
    return train_set, test_set


def run_folds(plan: FoldPlan, run_one: Callable[[int], FoldResult], jobs: int = 1) -> List[FoldResult]:
    """逐折执行，jobs > 1 时用线程池并行，每折独占自己的模型副本"""
    if jobs <= 1:
        return [run_one(i) for i in range(plan.k)]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(run_one, range(plan.k)))


def cross_validate(examples: Sequence[LabeledExample], config: RtcanConfig, schedule: TrainSchedule,
                   plan: FoldPlan, dim: str = "arousal", jobs: int = 1,
                   init_model: Optional[RtcanModel] = None, keep_models: bool = False
                   ) -> CrossValidationReport:
    """每一折在其余被试上训练、在本折被试上测试

    Args:
        examples: 全部样本
        config: 网络结构
        schedule: 训练计划，第 i 折的随机种子为 seed + i
        plan: 折划分，必须覆盖所有样本的被试
        dim: 目标维度
        jobs: 并行折数上限
        init_model: 可选的预训练参数(热启动)
        keep_models: 是否在结果中保留各折模型

    Returns:
        CrossValidationReport
    """
    covered = set(plan.subjects)
    missing = sorted({e.subject_id for e in examples} - covered)
    if missing:
        raise BadParams(f"折划分没有覆盖这些被试: {missing[:5]}")
    for i in range(plan.k):
        plan.check_disjoint(i)

    def run_one(fold_id: int) -> FoldResult:
        train_set, test_set = split_fold(examples, plan, fold_id)
        model = warm_start(RtcanModel(config, seed=schedule.seed + fold_id), init_model)
        result = train(model, train_set, schedule, fold_id=fold_id, dim=dim)
        report = evaluate(result.model, test_set, dim)
        logger.info(
            f"✅ fold {fold_id}: 训练 {len(train_set)} / 测试 {len(test_set)}，"
            f"acc={report.accuracy:.4f} f1={report.f1:.4f}"
        )
        return FoldResult(
            fold_id=fold_id,
            test_subjects=sorted(plan.folds[fold_id]),
            n_train=len(train_set),
            n_test=len(test_set),
            report=report,
            loss_history=result.loss_history,
            model=result.model if keep_models else None,
        )

    report = CrossValidationReport.of(run_folds(plan, run_one, jobs))
    logger.info(f"📊 平均 acc={report.mean.accuracy:.4f} f1={report.mean.f1:.4f}")
    return report
