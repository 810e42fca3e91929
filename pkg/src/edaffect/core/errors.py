"""
异常层级

所有错误都带一个稳定的 reason 代码和 CLI 退出码:
- 1: 用法错误
- 2: 数据/校验错误
- 3: 求解器未收敛
"""
from __future__ import annotations

from typing import Any


class EdaffectError(Exception):
    """edaffect 所有异常的基类"""

    reason: str = "error"
    exit_code: int = 2

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.reason)
        self.details = details

    def one_line(self) -> str:
        """单行、可被机器解析的错误描述"""
        detail = str(self).replace("\n", " ").strip()
        return f"error reason={self.reason} detail={detail}"


class UsageError(EdaffectError):
    reason = "usage"
    exit_code = 1


class ValidationError(EdaffectError, ValueError):
    """数据或前置条件校验失败"""

    reason = "validation"
    exit_code = 2


class NonFinite(ValidationError):
    reason = "non_finite"


class TooShort(ValidationError):
    reason = "too_short"


class BadRate(ValidationError):
    reason = "bad_rate"


class BadParams(ValidationError):
    reason = "bad_params"


class BadAnnotation(ValidationError):
    reason = "bad_annotation"


class ShapeMismatch(ValidationError):
    reason = "shape_mismatch"


class NotDivisible(ValidationError):
    reason = "not_divisible"


class BadLabel(ValidationError):
    reason = "bad_label"


class NotNormalized(ValidationError):
    reason = "not_normalized"


class DetachedLoss(ValidationError):
    reason = "detached_loss"


class MissingGrad(ValidationError):
    reason = "missing_grad"


class TooFew(ValidationError):
    reason = "too_few"


class EmptySet(ValidationError):
    reason = "empty_set"


class LeakageDetected(ValidationError):
    reason = "leakage_detected"


class Degenerate(ValidationError):
    reason = "degenerate"


class BadSpec(ValidationError):
    reason = "bad_spec"


class UnknownLayer(ValidationError):
    reason = "unknown_layer"


class ConfigError(ValidationError):
    reason = "config_error"


class IoError(EdaffectError, OSError):
    reason = "io_error"
    exit_code = 2


class NoConvergence(EdaffectError):
    """达到 max_iter 仍未满足容差; best 字段保存最优迭代点"""

    reason = "no_convergence"
    exit_code = 3

    def __init__(self, message: str = "", best: Any = None, **details: Any):
        super().__init__(message, **details)
        self.best = best
