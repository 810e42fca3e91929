"""共享夹具: 极小网络配置、可分的样本集、日志静音"""
import sys

import numpy as np
import pytest
from loguru import logger

from edaffect.core.model import BinaryLabels, LabeledExample
from edaffect.rtcan.config import RtcanConfig

TINY = dict(
    input_len=24,
    stem_out_channels=4,
    reduction_ratio=2,
    rfe_channels=(4, 4, 4, 4),
    classifier_hidden=(8,),
    init_std=0.1,
)


@pytest.fixture(autouse=True)
def quiet_logger():
    logger.remove()
    logger.add(sys.stderr, level="WARNING")
    yield
    logger.remove()


@pytest.fixture
def tiny_config():
    """返回构造极小 RtcanConfig 的工厂，关键字参数覆盖默认值"""
    def make(**overrides) -> RtcanConfig:
        return RtcanConfig(**{**TINY, **overrides})
    return make


@pytest.fixture
def make_examples():
    """按 j % 2 交替类别的样本集，两类的三个通道均值相差 3"""
    def make(n_subjects=4, per_subject=4, length=24, music_dim=0, seed=0):
        rng = np.random.default_rng(seed)
        examples = []
        for s in range(n_subjects):
            for j in range(per_subject):
                cls = j % 2
                channels = rng.normal(0.0, 1.0, size=(3, length)) + (1.5 if cls else -1.5)
                music = rng.normal(0.0, 0.5, size=music_dim) + (2 * cls - 1) if music_dim else None
                examples.append(LabeledExample(
                    channels, BinaryLabels(cls, cls), f"s{s:02d}", f"m{j:02d}", music
                ))
        return examples
    return make
