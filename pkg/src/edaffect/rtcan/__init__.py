"""RTCAN-1D 网络: 浅层卷积、共享 SCA/RNTA 注意力、残差特征提取与融合分类"""
from edaffect.rtcan.config import ATTENTION_ORDERS, RtcanConfig
from edaffect.rtcan.model import RtcanModel
from edaffect.rtcan.network import (
    attention_block,
    classify_fused,
    clip_temporal,
    model_forward,
    predict_proba,
    rfe_forward,
    rnta_forward,
    sca_forward,
    shallow_feature,
)

__all__ = [
    "ATTENTION_ORDERS",
    "RtcanConfig",
    "RtcanModel",
    "attention_block",
    "classify_fused",
    "clip_temporal",
    "model_forward",
    "predict_proba",
    "rfe_forward",
    "rnta_forward",
    "sca_forward",
    "shallow_feature",
]
