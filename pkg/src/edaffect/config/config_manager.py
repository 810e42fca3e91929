"""
运行配置管理器

一次运行的全部参数来自四层，优先级由低到高:
    数据类默认值 < presets.json 中的 profile < --config 指定的 JSON 文件 < 命令行参数

JSON 结构按模块分节:
    {"irf": {...}, "cvxeda": {...}, "rtcan": {...}, "schedule": {...},
     "pipeline": {...}, "svm": {...}, "synth": {..., "low": {...}, "high": {...}}}
不认识的节或字段在任何计算开始前报 ConfigError。
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import orjson
from loguru import logger

from edaffect.core.errors import ConfigError, IoError, ValidationError
from edaffect.cvxeda.config import BatemanIrf, CvxedaConfig
from edaffect.pipeline.config import PipelineConfig, SvmConfig, TrainSchedule
from edaffect.rtcan.config import RtcanConfig
from edaffect.synth.generator import SynthPlan, SynthSpec

DEFAULT_PRESETS_PATH = Path(__file__).parent / "presets.json"
SEED_ENV = "RTCAN_SEED"

SECTIONS = {
    "irf": BatemanIrf,
    "cvxeda": CvxedaConfig,
    "rtcan": RtcanConfig,
    "schedule": TrainSchedule,
    "pipeline": PipelineConfig,
    "svm": SvmConfig,
    "synth": SynthPlan,
}
SYNTH_SPEC_KEYS = ("low", "high")

Layer = Dict[str, Dict[str, Any]]


def _field_names(cls) -> set:
    return {f.name for f in fields(cls)}


def check_layer(layer: Mapping[str, Any], origin: str) -> None:
    """检查一层配置的节名和字段名"""
    if not isinstance(layer, Mapping):
        raise ConfigError(f"{origin}: 顶层必须是对象")
    for section, values in layer.items():
        if section == "description":
            continue
        if section not in SECTIONS:
            raise ConfigError(f"{origin}: 未知配置节 {section!r}")
        if not isinstance(values, Mapping):
            raise ConfigError(f"{origin}: 配置节 {section} 必须是对象")
        unknown = set(values) - _field_names(SECTIONS[section])
        if unknown:
            raise ConfigError(f"{origin}: 配置节 {section} 不认识的字段 {sorted(unknown)}")
        if section == "synth":
            for key in SYNTH_SPEC_KEYS:
                sub = values.get(key)
                if sub is None:
                    continue
                if not isinstance(sub, Mapping):
                    raise ConfigError(f"{origin}: synth.{key} 必须是对象")
                bad = set(sub) - _field_names(SynthSpec)
                if bad:
                    raise ConfigError(f"{origin}: synth.{key} 不认识的字段 {sorted(bad)}")


def merge_layers(*layers: Optional[Mapping[str, Any]]) -> Layer:
    """逐层覆盖，synth.low / synth.high 再往下合并一层"""
    merged: Layer = {}
    for layer in layers:
        if not layer:
            continue
        for section, values in layer.items():
            if section == "description":
                continue
            target = merged.setdefault(section, {})
            for key, value in values.items():
                if section == "synth" and key in SYNTH_SPEC_KEYS and value is not None:
                    target[key] = {**target.get(key, {}), **value}
                elif value is not None:
                    target[key] = value
    return merged


def resolve_seed(flag: Optional[int]) -> Optional[int]:
    """--seed 优先，其次环境变量 RTCAN_SEED"""
    if flag is not None:
        return int(flag)
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"环境变量 {SEED_ENV}={raw!r} 不是整数") from e


@dataclass(frozen=True)
class RunConfig:
    """一次运行的完整参数"""
    irf: BatemanIrf = field(default_factory=BatemanIrf)
    cvxeda: CvxedaConfig = field(default_factory=CvxedaConfig)
    rtcan: RtcanConfig = field(default_factory=RtcanConfig)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    synth: SynthPlan = field(default_factory=SynthPlan)
    profile: Optional[str] = None

    @property
    def seed(self) -> int:
        return self.schedule.seed

    def with_seed(self, seed: int) -> "RunConfig":
        """同一个种子驱动训练、折划分、SVM 和合成数据"""
        return replace(
            self,
            schedule=replace(self.schedule, seed=seed),
            svm=replace(self.svm, seed=seed),
            synth=replace(self.synth, seed=seed),
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "irf": asdict(self.irf),
            "cvxeda": asdict(self.cvxeda),
            "rtcan": self.rtcan.to_dict(),
            "schedule": asdict(self.schedule),
            "pipeline": asdict(self.pipeline),
            "svm": asdict(self.svm),
            "synth": asdict(self.synth),
        }
        for key in SYNTH_SPEC_KEYS:
            data["synth"][key]["scr_amp_range"] = list(data["synth"][key]["scr_amp_range"])
        return data


class ConfigManager:
    """读取 presets.json 与运行配置文件，按优先级合成 RunConfig"""

    def __init__(self, presets_path: str | Path | None = None):
        self.presets_path = Path(presets_path) if presets_path else DEFAULT_PRESETS_PATH
        self._presets: Optional[Dict[str, Layer]] = None

    @property
    def presets(self) -> Dict[str, Layer]:
        if self._presets is None:
            data = read_json_config(self.presets_path)
            for name, layer in data.items():
                check_layer(layer, f"profile {name}")
            self._presets = data
        return self._presets

    def profile_names(self) -> list:
        return sorted(self.presets)

    def profile(self, name: str) -> Layer:
        if name not in self.presets:
            raise ConfigError(f"未知 profile {name!r}，可选: {self.profile_names()}")
        return self.presets[name]

    def build(self, profile: Optional[str] = None, config_path: str | Path | None = None,
              overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
              seed: Optional[int] = None,
              base: Optional[Mapping[str, Mapping[str, Any]]] = None) -> RunConfig:
        """合成并校验运行配置

        Args:
            profile: presets.json 中的 profile 名
            config_path: JSON 配置文件
            overrides: 命令行参数转换成的配置层，值为 None 的字段忽略
            seed: 显式种子; 为 None 时回退到 RTCAN_SEED，再回退到配置中的 schedule.seed
            base: 比 profile 优先级更低的一层，例如检查点里保存的预处理参数

        Returns:
            RunConfig: 校验通过的配置
        """
        layers = []
        if base:
            check_layer(base, "检查点配置")
            layers.append(base)
        if profile:
            layers.append(self.profile(profile))
        if config_path:
            file_layer = read_json_config(config_path)
            check_layer(file_layer, str(config_path))
            layers.append(file_layer)
        if overrides:
            cleaned = {k: {kk: vv for kk, vv in v.items() if vv is not None} for k, v in overrides.items()}
            check_layer(cleaned, "命令行参数")
            layers.append(cleaned)
        merged = merge_layers(*layers)

        try:
            run = RunConfig(
                irf=BatemanIrf(**merged.get("irf", {})),
                cvxeda=CvxedaConfig(**merged.get("cvxeda", {})),
                rtcan=RtcanConfig.from_dict(merged.get("rtcan", {})),
                schedule=TrainSchedule(**merged.get("schedule", {})),
                pipeline=PipelineConfig(**merged.get("pipeline", {})),
                svm=SvmConfig(**merged.get("svm", {})),
                synth=_build_plan(merged.get("synth", {})),
                profile=profile,
            )
        except ValidationError:
            raise
        except TypeError as e:
            raise ConfigError(f"配置值类型不正确: {e}") from e

        resolved = resolve_seed(seed)
        if resolved is not None:
            run = run.with_seed(resolved)
        logger.debug(f"🔄 配置合成完成: profile={profile} file={config_path} seed={run.seed}")
        return run


def _build_plan(values: Mapping[str, Any]) -> SynthPlan:
    values = dict(values)
    defaults = SynthPlan()
    for key in SYNTH_SPEC_KEYS:
        if key in values:
            values[key] = replace(getattr(defaults, key), **values[key])
    return SynthPlan(**values)


def read_json_config(path: str | Path) -> Dict[str, Any]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IoError(f"读取配置 {path} 失败: {e}") from e
    try:
        data = orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"{path} 不是合法的 JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: 顶层必须是对象")
    return data
