"""数据整理、标注二值化、被试独立交叉验证、训练、指标与基线"""
from edaffect.pipeline.baseline import LinearSvm, svm_baseline, svm_cross_validate
from edaffect.pipeline.config import PipelineConfig, SvmConfig, TrainSchedule
from edaffect.pipeline.crossval import CrossValidationReport, FoldResult, cross_validate
from edaffect.pipeline.dataset import Corpus, assemble_examples, load_corpus
from edaffect.pipeline.folds import FoldPlan, make_fold_plan, plan_for_subjects, select_subjects
from edaffect.pipeline.metrics import MeanMetrics, MetricsReport
from edaffect.pipeline.preprocess import preprocess
from edaffect.pipeline.relabel import RelabelResult, relabel_all, relabel_subject
from edaffect.pipeline.stats import PearsonResult, pearson_r
from edaffect.pipeline.train import TrainResult, evaluate, schedule_lr, train

__all__ = [
    "Corpus",
    "CrossValidationReport",
    "FoldPlan",
    "FoldResult",
    "LinearSvm",
    "MeanMetrics",
    "MetricsReport",
    "PearsonResult",
    "PipelineConfig",
    "RelabelResult",
    "SvmConfig",
    "TrainResult",
    "TrainSchedule",
    "assemble_examples",
    "cross_validate",
    "evaluate",
    "load_corpus",
    "make_fold_plan",
    "pearson_r",
    "plan_for_subjects",
    "preprocess",
    "relabel_all",
    "relabel_subject",
    "schedule_lr",
    "select_subjects",
    "svm_baseline",
    "svm_cross_validate",
    "train",
]
