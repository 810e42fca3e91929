"""相关性分析"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import stats

from edaffect.core.errors import Degenerate, ShapeMismatch, TooFew


@dataclass(frozen=True)
class PearsonResult:
    """r 与 t 统计量 r·sqrt((n−2)/(1−r²))，|r| = 1 时 t 为 ±inf"""
    r: float
    t: float
    n: int

    def __iter__(self) -> Iterator[float]:
        return iter((self.r, self.t))


def pearson_r(a, b) -> PearsonResult:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ShapeMismatch(f"两个序列长度不一致: {x.shape} 与 {y.shape}")
    n = x.shape[0]
    if n < 3:
        raise TooFew(f"至少需要 3 对样本，实际 {n}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise Degenerate("常数序列的相关系数没有定义")
    r = float(np.clip(stats.pearsonr(x, y).statistic, -1.0, 1.0))
    if abs(r) >= 1.0:
        t = math.copysign(math.inf, r)
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return PearsonResult(r=r, t=t, n=n)
