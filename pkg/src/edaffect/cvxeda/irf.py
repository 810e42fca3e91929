"""Bateman 冲激响应采样"""
from __future__ import annotations

import math

import numpy as np

from edaffect.core.errors import BadRate
from edaffect.cvxeda.config import BatemanIrf


def sample_irf(irf: BatemanIrf, sampling_hz: float) -> np.ndarray:
    """h[k] = exp(−kΔ/tau1) − exp(−kΔ/tau0)，kΔ ≤ duration，归一化到峰值 1"""
    if not math.isfinite(sampling_hz) or sampling_hz <= 0:
        raise BadRate(f"sampling_hz 必须为正数，实际 {sampling_hz}")
    # 浮点误差下 duration·fs 恰为整数时也要包含端点
    count = int(math.floor(irf.duration * sampling_hz + 1e-9)) + 1
    t = np.arange(count, dtype=np.float64) / sampling_hz
    h = np.exp(-t / irf.tau1) - np.exp(-t / irf.tau0)
    peak = h.max()
    if peak <= 0:
        # 采样过粗，只剩 h[0] = 0
        return h
    return h / peak


def peak_time(irf: BatemanIrf) -> float:
    """连续时间下的峰值位置 ln(tau1/tau0)·tau0·tau1/(tau1 − tau0)"""
    return math.log(irf.tau1 / irf.tau0) * irf.tau0 * irf.tau1 / (irf.tau1 - irf.tau0)
