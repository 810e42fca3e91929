"""原始记录 → 网络输入 3×L"""
from __future__ import annotations

from typing import Optional

import numpy as np

from edaffect.core.model import DecomposedEda, EdaTrace
from edaffect.core.signal import resample_linear, trim_head, validate_trace, zscore
from edaffect.cvxeda import BatemanIrf, CvxedaConfig, decompose

DEFAULT_TRIM_S = 3.0


def channels_from_decomposition(dec: DecomposedEda, input_len: int) -> np.ndarray:
    """三个通道各自 z-score 后线性重采样到 input_len，行序 origin, phasic, tonic"""
    rows = [resample_linear(zscore(ch), input_len) for ch in (dec.origin, dec.phasic, dec.tonic)]
    return np.stack(rows)


def preprocess(trace: EdaTrace, irf: Optional[BatemanIrf] = None,
               cvx_cfg: Optional[CvxedaConfig] = None, input_len: int = 1200,
               trim_s: float = DEFAULT_TRIM_S) -> np.ndarray:
    """去头 → cvxEDA 分解 → 逐通道 z-score → 重采样"""
    trimmed = trim_head(validate_trace(trace), trim_s)
    return channels_from_decomposition(decompose(trimmed, irf, cvx_cfg), input_len)
