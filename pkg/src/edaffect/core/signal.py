"""
基础信号预处理: 校验、去头、线性重采样、z-score
"""
from __future__ import annotations

import math

import numpy as np

from edaffect.core.errors import BadParams, BadRate, NonFinite, TooShort
from edaffect.core.model import EdaTrace

# 低于该相对标准差视为常数信号
_FLAT_STD = 1e-12


def validate_trace(trace: EdaTrace) -> EdaTrace:
    """校验记录的不变量，全部满足时原样返回"""
    if not (trace.sampling_hz > 0) or not math.isfinite(trace.sampling_hz):
        raise BadRate(f"{trace.subject_id}/{trace.stimulus_id}: sampling_hz={trace.sampling_hz}")
    if trace.n_samples < 2:
        raise TooShort(f"{trace.subject_id}/{trace.stimulus_id}: 仅有 {trace.n_samples} 个采样点")
    if not np.all(np.isfinite(trace.samples)):
        bad = int(np.flatnonzero(~np.isfinite(trace.samples))[0])
        raise NonFinite(f"{trace.subject_id}/{trace.stimulus_id}: 第 {bad} 个采样点非有限")
    return trace


def trim_head(trace: EdaTrace, seconds: float) -> EdaTrace:
    """去掉开头 floor(seconds × sampling_hz) 个采样点"""
    if seconds < 0 or not math.isfinite(seconds):
        raise BadParams(f"seconds 必须非负，实际 {seconds}")
    drop = int(math.floor(seconds * trace.sampling_hz))
    if trace.n_samples - drop < 2:
        raise TooShort(
            f"{trace.subject_id}/{trace.stimulus_id}: 去掉 {drop} 个点后不足 2 个采样点"
        )
    if drop == 0:
        return trace
    return trace.with_samples(trace.samples[drop:])


def resample_linear(signal, target_len: int) -> np.ndarray:
    """在 [0, N−1] 的均匀网格上线性插值到 target_len 个点，端点精确保留"""
    values = np.asarray(signal, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 2:
        raise TooShort(f"重采样输入至少需要 2 个点，实际形状 {values.shape}")
    if target_len < 2:
        raise TooShort(f"target_len 至少为 2，实际 {target_len}")
    n = values.shape[0]
    grid = np.linspace(0.0, n - 1, int(target_len))
    return np.interp(grid, np.arange(n, dtype=np.float64), values)


def zscore(signal) -> np.ndarray:
    """均值 0、总体标准差 1; 常数输入返回全零"""
    values = np.asarray(signal, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 2:
        raise TooShort(f"z-score 输入至少需要 2 个点，实际形状 {values.shape}")
    mean = values.mean()
    std = values.std()
    if std <= _FLAT_STD * max(1.0, abs(mean)):
        return np.zeros_like(values)
    return (values - mean) / std


def zscore_columns(matrix) -> np.ndarray:
    """按列 z-score(行是样本)，用于刺激特征表"""
    values = np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2:
        raise TooShort(f"期望二维矩阵，实际形状 {values.shape}")
    if values.shape[0] < 2 or values.shape[1] == 0:
        return np.zeros_like(values)
    return np.stack([zscore(values[:, j]) for j in range(values.shape[1])], axis=1)
