"""领域类型、校验与基础信号处理"""
from edaffect.core.errors import EdaffectError, NoConvergence, ValidationError
from edaffect.core.model import (
    AnnotationRecord,
    BinaryLabels,
    DecomposedEda,
    EdaTrace,
    LabeledExample,
    StimulusFeatures,
)
from edaffect.core.signal import resample_linear, trim_head, validate_trace, zscore

__all__ = [
    "AnnotationRecord",
    "BinaryLabels",
    "DecomposedEda",
    "EdaTrace",
    "EdaffectError",
    "LabeledExample",
    "NoConvergence",
    "StimulusFeatures",
    "ValidationError",
    "resample_linear",
    "trim_head",
    "validate_trace",
    "zscore",
]
