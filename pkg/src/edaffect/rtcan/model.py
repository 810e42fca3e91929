"""
RTCAN-1D 的参数容器

参数按名字平铺保存，SCA 与 RNTA 各只有一份，三个切片共用同一组张量。
"""
from __future__ import annotations

import copy
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from edaffect.core.errors import ConfigError, ShapeMismatch
from edaffect.rtcan.config import RFE_LEVELS, RtcanConfig
from edaffect.tensor.checkpoint import Checkpoint
from edaffect.tensor.ops import RunningStats
from edaffect.tensor.tensor import Tensor


def _parameter_shapes(cfg: RtcanConfig) -> List[Tuple[str, Tuple[int, ...], str]]:
    """(名字, 形状, 初始化方式)，初始化方式为 normal / zeros / ones"""
    c = cfg.stem_out_channels
    half = c // 2
    shapes: List[Tuple[str, Tuple[int, ...], str]] = [
        ("stem.conv.w", (c, 3, cfg.stem_kernel), "normal"),
        ("stem.conv.b", (c,), "zeros"),
        ("stem.bn.gamma", (c,), "ones"),
        ("stem.bn.beta", (c,), "zeros"),
    ]
    shapes += _sca_shapes("sca", c, cfg.reduction_ratio)
    for branch in ("theta", "phi", "g"):
        shapes += [(f"rnta.{branch}.w", (half, c, 1), "normal"), (f"rnta.{branch}.b", (half,), "zeros")]
    shapes += [
        ("rnta.out.w", (c, half, 1), "normal"),
        ("rnta.out.b", (c,), "zeros"),
        # 输出 BN 的 gamma 初始化为 0，RNTA 初始时是恒等映射
        ("rnta.bn.gamma", (c,), "zeros"),
        ("rnta.bn.beta", (c,), "zeros"),
    ]

    in_ch = c
    for level in range(RFE_LEVELS):
        out_ch = cfg.rfe_channels[level]
        stride = 1 if level == 0 else 2
        for rep in range(cfg.rfe_depth):
            rep_in = in_ch if rep == 0 else out_ch
            prefix = f"rfe.{level}.{rep}"
            if cfg.sca_in_resblock:
                shapes += _sca_shapes(f"{prefix}.sca", rep_in, cfg.reduction_ratio)
            shapes += [
                (f"{prefix}.conv.w", (out_ch, rep_in, 3), "normal"),
                (f"{prefix}.conv.b", (out_ch,), "zeros"),
                (f"{prefix}.bn.gamma", (out_ch,), "ones"),
                (f"{prefix}.bn.beta", (out_ch,), "zeros"),
            ]
        if in_ch != out_ch or stride != 1:
            shapes += [
                (f"rfe.{level}.skip.w", (out_ch, in_ch, 1), "normal"),
                (f"rfe.{level}.skip.b", (out_ch,), "zeros"),
            ]
        in_ch = out_ch

    widths = [cfg.feature_dim + cfg.music_dim, *cfg.classifier_hidden, cfg.num_classes]
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        shapes += [(f"cls.fc{i}.w", (fan_in, fan_out), "normal"), (f"cls.fc{i}.b", (fan_out,), "zeros")]
    return shapes


def _sca_shapes(prefix: str, channels: int, ratio: int) -> List[Tuple[str, Tuple[int, ...], str]]:
    squeezed = channels // ratio
    return [
        (f"{prefix}.fc0.w", (channels, squeezed), "normal"),
        (f"{prefix}.fc0.b", (squeezed,), "zeros"),
        (f"{prefix}.fc1.w", (squeezed, channels), "normal"),
        (f"{prefix}.fc1.b", (channels,), "zeros"),
    ]


def batchnorm_names(cfg: RtcanConfig) -> List[Tuple[str, int]]:
    names = [("stem.bn", cfg.stem_out_channels), ("rnta.bn", cfg.stem_out_channels)]
    for level in range(RFE_LEVELS):
        for rep in range(cfg.rfe_depth):
            names.append((f"rfe.{level}.{rep}.bn", cfg.rfe_channels[level]))
    return names


class RtcanModel:
    """配置 + 命名参数 + BN 滑动统计量"""

    def __init__(self, config: RtcanConfig, seed: int = 0):
        self.config = config
        self.training = True
        self.params: Dict[str, Tensor] = {}
        self.stats: Dict[str, RunningStats] = {}
        rng = np.random.default_rng(seed)
        for name, shape, init in _parameter_shapes(config):
            if init == "normal":
                data = rng.normal(0.0, config.init_std, size=shape)
            elif init == "ones":
                data = np.ones(shape)
            else:
                data = np.zeros(shape)
            self.params[name] = Tensor(data, requires_grad=True, name=name)
        for name, channels in batchnorm_names(config):
            self.stats[name] = RunningStats.fresh(channels)

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.params.items())

    def parameters(self) -> List[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def train(self) -> "RtcanModel":
        self.training = True
        return self

    def eval(self) -> "RtcanModel":
        self.training = False
        return self

    def replica(self) -> "RtcanModel":
        """深拷贝，供并行 worker 独占使用"""
        clone = copy.copy(self)
        clone.params = {
            name: Tensor(p.data.copy(), requires_grad=p.requires_grad, name=name)
            for name, p in self.params.items()
        }
        clone.stats = {name: s.copy() for name, s in self.stats.items()}
        return clone

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    # ------------------------------------------------------------ 检查点

    def to_checkpoint(self, extra_config: Optional[Dict] = None) -> Checkpoint:
        buffers = {}
        for name, s in self.stats.items():
            buffers[f"{name}.running_mean"] = s.mean
            buffers[f"{name}.running_var"] = s.var
        config = {"rtcan": self.config.to_dict()}
        if extra_config:
            config.update(extra_config)
        return Checkpoint(
            config=config,
            parameters={name: p.data for name, p in self.params.items()},
            buffers=buffers,
        )

    def load_state(self, ckpt: Checkpoint) -> "RtcanModel":
        """按名字载入参数和缓冲区，名字或形状不符时报错"""
        missing = set(self.params) - set(ckpt.parameters)
        unexpected = set(ckpt.parameters) - set(self.params)
        if missing or unexpected:
            raise ConfigError(
                f"检查点参数不匹配: 缺少 {sorted(missing)[:5]}, 多余 {sorted(unexpected)[:5]}"
            )
        for name, p in self.params.items():
            data = ckpt.parameters[name]
            if data.shape != p.shape:
                raise ShapeMismatch(f"{name}: 检查点形状 {data.shape}，模型形状 {p.shape}")
            p.data = np.array(data, dtype=np.float64)
            p.grad = None
        for name, s in self.stats.items():
            mean = ckpt.buffers.get(f"{name}.running_mean")
            var = ckpt.buffers.get(f"{name}.running_var")
            if mean is not None and var is not None:
                s.mean = np.array(mean, dtype=np.float64)
                s.var = np.array(var, dtype=np.float64)
        return self

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "RtcanModel":
        if "rtcan" not in ckpt.config:
            raise ConfigError("检查点缺少 rtcan 配置")
        model = cls(RtcanConfig.from_dict(ckpt.config["rtcan"]))
        return model.load_state(ckpt)
