"""cvxEDA 参数"""
from __future__ import annotations

import math
from dataclasses import dataclass

from edaffect.core.errors import BadParams

CONV_METHODS = ("auto", "direct", "fft")


@dataclass(frozen=True)
class BatemanIrf:
    """双指数冲激响应 exp(−t/tau1) − exp(−t/tau0)，单位秒"""
    tau0: float = 0.7
    tau1: float = 2.0
    duration: float = 40.0

    def __post_init__(self):
        for name in ("tau0", "tau1", "duration"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise BadParams(f"{name} 必须为正数，实际 {value}")
        if self.tau1 <= self.tau0:
            raise BadParams(f"需要 tau1 > tau0，实际 tau0={self.tau0} tau1={self.tau1}")
        if self.duration < 5 * self.tau1:
            raise BadParams(f"duration={self.duration} 小于 5·tau1={5 * self.tau1}")


@dataclass(frozen=True)
class CvxedaConfig:
    """分解求解参数

    Args:
        alpha: 稀疏项权重
        gamma: 样条系数的岭回归权重
        knot_spacing_s: 三次样条结点间距(秒)
        solver_tol: KKT 残差容差(相对 max(1, ‖y‖∞))
        max_iter: 最大迭代次数
        penalize_driver: True 时 ℓ1 惩罚直接加在驱动 p 上，否则加在相位分量 Hp 上
        conv_method: scipy.signal.convolve 的实现方式
    """
    alpha: float = 8e-4
    gamma: float = 1e-2
    knot_spacing_s: float = 10.0
    solver_tol: float = 1e-6
    max_iter: int = 20000
    penalize_driver: bool = False
    conv_method: str = "auto"

    def __post_init__(self):
        for name in ("alpha", "gamma", "knot_spacing_s", "solver_tol"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise BadParams(f"{name} 必须为正数，实际 {value}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise BadParams(f"max_iter 必须是正整数，实际 {self.max_iter}")
        if self.conv_method not in CONV_METHODS:
            raise BadParams(f"conv_method 必须是 {CONV_METHODS} 之一")
