"""网络超参数"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

from edaffect.core.errors import BadParams, ConfigError, NotDivisible

ATTENTION_ORDERS = ("sca_then_rnta", "rnta_then_sca", "parallel", "sca_only", "rnta_only", "none")
RFE_LEVELS = 4


def conv_out_len(length: int, kernel: int, stride: int, pad: int) -> int:
    return (length + 2 * pad - kernel) // stride + 1


@dataclass(frozen=True)
class RtcanConfig:
    """RTCAN-1D 结构参数

    Args:
        input_len: 每个通道的输入长度 L
        stem_out_channels: 浅层卷积输出通道 C
        stem_kernel / stem_stride: 浅层卷积核与步长，padding = kernel // 2
        num_clips: 时间切片数，固定为 3
        reduction_ratio: SCA 的压缩比 r
        attention_order: 注意力排列方式，见 ATTENTION_ORDERS
        rnta_pool_stride: RNTA 中 φ/g 分支的池化核与步长
        rfe_depth: 每个残差层的重复次数 d
        rfe_channels: 4 个残差层的输出通道
        sca_in_resblock: 残差块内是否带 SCA 门控
        music_dim: 刺激特征维度 D_m，0 表示只用 EDA
        classifier_hidden: 分类器隐藏层宽度
        num_classes: 类别数
        init_std: 权重初始化的高斯标准差
        bn_momentum / bn_eps: 批归一化参数
    """
    input_len: int = 1200
    stem_out_channels: int = 64
    stem_kernel: int = 7
    stem_stride: int = 2
    num_clips: int = 3
    reduction_ratio: int = 4
    attention_order: str = "sca_then_rnta"
    rnta_pool_stride: int = 2
    rfe_depth: int = 1
    rfe_channels: Tuple[int, ...] = (64, 64, 64, 64)
    sca_in_resblock: bool = True
    music_dim: int = 0
    classifier_hidden: Tuple[int, ...] = (256, 128)
    num_classes: int = 2
    init_std: float = 0.01
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "rfe_channels", tuple(int(c) for c in self.rfe_channels))
        object.__setattr__(self, "classifier_hidden", tuple(int(c) for c in self.classifier_hidden))

        positive = ("input_len", "stem_out_channels", "stem_kernel", "stem_stride",
                    "reduction_ratio", "rnta_pool_stride", "rfe_depth", "num_classes")
        for name in positive:
            if getattr(self, name) < 1:
                raise BadParams(f"{name} 必须 ≥ 1，实际 {getattr(self, name)}")
        if self.num_clips != 3:
            raise BadParams(f"num_clips 固定为 3，实际 {self.num_clips}")
        if self.attention_order not in ATTENTION_ORDERS:
            raise BadParams(f"attention_order 必须是 {ATTENTION_ORDERS} 之一，实际 {self.attention_order!r}")
        if len(self.rfe_channels) != RFE_LEVELS or min(self.rfe_channels) < 1:
            raise BadParams(f"rfe_channels 必须是 4 个正整数，实际 {self.rfe_channels}")
        if self.music_dim < 0:
            raise BadParams(f"music_dim 不能为负，实际 {self.music_dim}")
        if self.num_classes < 2:
            raise BadParams(f"num_classes 至少为 2，实际 {self.num_classes}")
        if any(h < 1 for h in self.classifier_hidden):
            raise BadParams(f"classifier_hidden 必须为正整数，实际 {self.classifier_hidden}")
        if self.init_std <= 0 or not 0 < self.bn_momentum <= 1 or self.bn_eps < 0:
            raise BadParams("init_std / bn_momentum / bn_eps 取值非法")

        c = self.stem_out_channels
        if c % self.reduction_ratio:
            raise BadParams(f"通道数 {c} 不能被 reduction_ratio {self.reduction_ratio} 整除")
        if c % 2:
            raise BadParams(f"RNTA 需要偶数通道，实际 {c}")
        if self.sca_in_resblock:
            widths = (c,) + self.rfe_channels
            if any(w % self.reduction_ratio for w in widths):
                raise BadParams(f"残差块内 SCA 的通道 {widths} 必须能被 {self.reduction_ratio} 整除")
        if self.stem_kernel > self.input_len + 2 * self.stem_padding:
            raise BadParams(f"stem_kernel={self.stem_kernel} 超出输入长度")
        if self.stem_len % self.num_clips:
            raise NotDivisible(f"浅层特征长度 {self.stem_len} 不能被 {self.num_clips} 整除")
        if self.clip_len < self.rnta_pool_stride:
            raise BadParams(f"切片长度 {self.clip_len} 小于 rnta_pool_stride {self.rnta_pool_stride}")

    @property
    def stem_padding(self) -> int:
        return self.stem_kernel // 2

    @property
    def stem_len(self) -> int:
        return conv_out_len(self.input_len, self.stem_kernel, self.stem_stride, self.stem_padding)

    @property
    def clip_len(self) -> int:
        return self.stem_len // self.num_clips

    @property
    def feature_dim(self) -> int:
        return self.rfe_channels[-1]

    def level_lengths(self) -> Tuple[int, ...]:
        """每个残差层输出的时间长度"""
        lengths = []
        length = self.stem_len
        for level in range(RFE_LEVELS):
            if level > 0:
                length = conv_out_len(length, 3, 2, 1)
            lengths.append(length)
        return tuple(lengths)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["rfe_channels"] = list(self.rfe_channels)
        data["classifier_hidden"] = list(self.classifier_hidden)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RtcanConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"RtcanConfig 不认识的字段: {sorted(unknown)}")
        return cls(**data)
