"""
分解用到的两个线性算子

- PhasicOperator: 由采样 IRF 构成的因果卷积 r = H p (N×N 下三角 Toeplitz，按带宽截断)
- TonicBasis: 均匀结点三次 B 样条 B 加上偏置/线性漂移列 C，t = Bλ + Cd
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal
from scipy.interpolate import BSpline

from edaffect.core.errors import BadParams, BadRate, NonFinite, ShapeMismatch, TooShort
from edaffect.core.model import frozen_array
from edaffect.cvxeda.config import CONV_METHODS

SPLINE_DEGREE = 3


@dataclass(frozen=True, eq=False)
class PhasicOperator:
    irf_samples: np.ndarray
    n: int
    method: str = "auto"

    def apply(self, p: np.ndarray) -> np.ndarray:
        """(Hp)[i] = Σ_{k≤i} h[k]·p[i−k]"""
        p = self._check(p)
        return signal.convolve(p, self.irf_samples, mode="full", method=self.method)[: self.n]

    def apply_t(self, q: np.ndarray) -> np.ndarray:
        """Hᵀq: 反转 → 卷积 → 反转"""
        q = self._check(q)
        rev = signal.convolve(q[::-1], self.irf_samples, mode="full", method=self.method)
        return rev[: self.n][::-1].copy()

    def matrix(self) -> np.ndarray:
        """稠密 H，仅用于小规模校验"""
        column = np.zeros(self.n)
        column[: self.irf_samples.shape[0]] = self.irf_samples
        return np.tril(linalg.toeplitz(column))

    def _check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ShapeMismatch(f"算子长度为 {self.n}，输入形状 {v.shape}")
        return v


def build_phasic_operator(irf_samples, n: int, method: str = "auto") -> PhasicOperator:
    """构造因果卷积算子，核长度截断到 N"""
    if n < 2:
        raise TooShort(f"N 至少为 2，实际 {n}")
    if method not in CONV_METHODS:
        raise BadParams(f"未知卷积实现: {method}")
    kernel = np.asarray(irf_samples, dtype=np.float64)
    if kernel.ndim != 1 or kernel.size == 0:
        raise ShapeMismatch("IRF 必须是非空一维向量")
    if not np.all(np.isfinite(kernel)):
        raise NonFinite("IRF 含有非有限值")
    if kernel[0] < 0:
        raise BadParams(f"IRF 首项必须非负，实际 {kernel[0]}")
    return PhasicOperator(frozen_array(kernel[:n]), int(n), method)


@dataclass(frozen=True, eq=False)
class TonicBasis:
    b: np.ndarray
    c: np.ndarray
    knots: np.ndarray

    @property
    def n(self) -> int:
        return int(self.b.shape[0])

    @property
    def n_splines(self) -> int:
        return int(self.b.shape[1])

    def evaluate(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        return self.b @ lam + self.c @ d


def build_tonic_basis(n: int, sampling_hz: float, knot_spacing_s: float) -> TonicBasis:
    """均匀结点(两端各补 3 个)三次 B 样条，所有采样时刻都落在完全覆盖区间内"""
    if not math.isfinite(sampling_hz) or sampling_hz <= 0:
        raise BadRate(f"sampling_hz 必须为正数，实际 {sampling_hz}")
    if knot_spacing_s <= 0:
        raise BadParams(f"knot_spacing_s 必须为正数，实际 {knot_spacing_s}")
    if n < 2 or n / sampling_hz < 2 * knot_spacing_s:
        raise TooShort(
            f"信号时长 {n / sampling_hz:.3f}s 不足两个结点间距 {2 * knot_spacing_s:.3f}s"
        )

    t = np.arange(n, dtype=np.float64) / sampling_hz
    intervals = max(1, math.ceil(t[-1] / knot_spacing_s))
    knots = knot_spacing_s * np.arange(-SPLINE_DEGREE, intervals + SPLINE_DEGREE + 1, dtype=np.float64)
    # 舍入误差不能把最后一个采样点推出样条的定义区间
    t_eval = np.clip(t, knots[SPLINE_DEGREE], knots[intervals + SPLINE_DEGREE])
    b = BSpline.design_matrix(t_eval, knots, SPLINE_DEGREE).toarray()
    c = np.column_stack([np.ones(n), np.arange(n, dtype=np.float64) / n])
    return TonicBasis(frozen_array(b), frozen_array(c), frozen_array(knots))
