"""
合成 EDA 与标注

生成模型与分解模型一致: 泊松分布的驱动脉冲 × 幅值，与采样 IRF 做因果卷积得到 phasic，
加上线性 tonic 与高斯噪声。
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from edaffect.core.errors import BadSpec
from edaffect.core.model import AnnotationRecord, EdaTrace, StimulusFeatures, frozen_array
from edaffect.cvxeda.config import BatemanIrf
from edaffect.cvxeda.irf import sample_irf

MIN_SAMPLES = 64
ANNOTATION_CENTERS = (2.0, 8.0)
ANNOTATION_JITTER = 0.5
GAIN_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class SynthSpec:
    """单条合成记录的参数

    幅值与噪声都是绝对量(μS)，不随记录幅度缩放。默认 noise_std=0.02 约为 tonic_level
    的 1%，相对最小 SCR 幅值 0.2 的信噪比不低于 20 dB。
    """
    sampling_hz: float = 8.0
    duration_s: float = 60.0
    scr_rate_hz: float = 0.05
    scr_amp_range: Tuple[float, float] = (0.2, 1.0)
    tonic_level: float = 2.0
    tonic_drift_per_s: float = 0.005
    noise_std: float = 0.02
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scr_amp_range", tuple(float(a) for a in self.scr_amp_range))
        if not self.sampling_hz > 0 or not self.duration_s > 0:
            raise BadSpec("sampling_hz 与 duration_s 必须为正数")
        if self.duration_s * self.sampling_hz < MIN_SAMPLES:
            raise BadSpec(f"duration_s·sampling_hz 至少为 {MIN_SAMPLES}")
        if self.scr_rate_hz < 0 or self.noise_std < 0:
            raise BadSpec("scr_rate_hz 与 noise_std 不能为负")
        if len(self.scr_amp_range) != 2:
            raise BadSpec("scr_amp_range 必须是 [lo, hi]")
        lo, hi = self.scr_amp_range
        if lo < 0 or hi < lo:
            raise BadSpec(f"scr_amp_range 非法: {self.scr_amp_range}")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration_s * self.sampling_hz))


@dataclass(frozen=True, eq=False)
class SynthTruth:
    spike_times_s: Tuple[float, ...]
    spike_amplitudes: Tuple[float, ...]
    true_phasic: np.ndarray
    true_tonic: np.ndarray
    noise: np.ndarray
    driver: np.ndarray

    def __post_init__(self):
        for name in ("true_phasic", "true_tonic", "noise", "driver"):
            object.__setattr__(self, name, frozen_array(getattr(self, name), ndim=1))


def gen_trace(spec: SynthSpec, irf: Optional[BatemanIrf] = None, subject_id: str = "subj000",
              stimulus_id: str = "stim000", spikes: Optional[Sequence[Tuple[float, float]]] = None,
              gain: float = 1.0) -> Tuple[EdaTrace, SynthTruth]:
    """生成一条记录及其真值

    Args:
        spec: 生成参数
        irf: 冲激响应参数
        spikes: 指定 (时间秒, 幅值) 列表时不再随机抽取脉冲
        gain: 个体增益，作用在 phasic 与 tonic 上

    Returns:
        (EdaTrace, SynthTruth)，trace = true_phasic + true_tonic + noise
    """
    irf = irf or BatemanIrf()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    fs = spec.sampling_hz

    if spikes is None:
        count = rng.poisson(spec.scr_rate_hz * spec.duration_s)
        times = np.sort(rng.uniform(0.0, spec.duration_s, size=count))
        amps = rng.uniform(*spec.scr_amp_range, size=count)
    else:
        times = np.array([s[0] for s in spikes], dtype=np.float64)
        amps = np.array([s[1] for s in spikes], dtype=np.float64)
    index = np.minimum(np.floor(times * fs).astype(np.int64), n - 1)

    driver = np.zeros(n)
    np.add.at(driver, index, amps)
    kernel = sample_irf(irf, fs)[:n]
    phasic = gain * signal.convolve(driver, kernel, mode="full", method="direct")[:n]
    t = np.arange(n, dtype=np.float64) / fs
    tonic = gain * (spec.tonic_level + spec.tonic_drift_per_s * t)
    noise = rng.normal(0.0, spec.noise_std, size=n) if spec.noise_std > 0 else np.zeros(n)

    trace = EdaTrace(subject_id, stimulus_id, fs, phasic + tonic + noise)
    truth = SynthTruth(
        spike_times_s=tuple(float(i) / fs for i in index),
        spike_amplitudes=tuple(float(a) for a in amps),
        true_phasic=phasic,
        true_tonic=tonic,
        noise=noise,
        driver=gain * driver,
    )
    return trace, truth


@dataclass(frozen=True)
class SynthPlan:
    """整套语料的生成参数"""
    n_subjects: int = 20
    traces_per_subject: int = 20
    music_dim: int = 8
    seed: int = 42
    low: SynthSpec = field(default_factory=lambda: SynthSpec(scr_rate_hz=0.05))
    high: SynthSpec = field(default_factory=lambda: SynthSpec(scr_rate_hz=0.25))

    def __post_init__(self):
        if self.n_subjects < 10:
            raise BadSpec(f"n_subjects 至少为 10，实际 {self.n_subjects}")
        if self.traces_per_subject < 2:
            raise BadSpec(f"traces_per_subject 至少为 2，实际 {self.traces_per_subject}")
        if self.music_dim < 0:
            raise BadSpec(f"music_dim 不能为负，实际 {self.music_dim}")
        if self.low.sampling_hz != self.high.sampling_hz or self.low.duration_s != self.high.duration_s:
            raise BadSpec("low / high 两个规格的采样率与时长必须一致")


@dataclass
class SynthDataset:
    traces: List[EdaTrace]
    annotations: List[AnnotationRecord]
    stimuli: List[StimulusFeatures]
    truths: Dict[Tuple[str, str], SynthTruth]
    classes: Dict[str, int]
    gains: Dict[str, float]


def _stimulus_vector(cls: int, music_dim: int, rng: np.random.Generator) -> np.ndarray:
    informative = max(1, music_dim // 2)
    vec = rng.normal(0.0, 1.0, size=music_dim)
    vec[:informative] = (2 * cls - 1) + rng.normal(0.0, 0.25, size=informative)
    return vec


def gen_dataset(n_subjects: int = 20, traces_per_subject: int = 20,
                spec_low: Optional[SynthSpec] = None, spec_high: Optional[SynthSpec] = None,
                music_dim: int = 8, seed: int = 42, irf: Optional[BatemanIrf] = None) -> SynthDataset:
    """生成 n_subjects × traces_per_subject 条记录

    刺激 j 的类别为 j % 2(所有被试共享刺激)，类别 1 用 spec_high，类别 0 用 spec_low;
    标注落在 (8, 8) 或 (2, 2) 附近(σ=0.5，截断到 [1, 9])，
    每个被试一个 [0.5, 2.0] 的随机增益。
    """
    plan = SynthPlan(n_subjects, traces_per_subject, music_dim, seed,
                     spec_low or SynthSpec(scr_rate_hz=0.05), spec_high or SynthSpec(scr_rate_hz=0.25))
    irf = irf or BatemanIrf()

    stim_rng = np.random.default_rng([seed, 0])
    classes = {f"stim{j:03d}": j % 2 for j in range(traces_per_subject)}
    stimuli = [
        StimulusFeatures(sid, _stimulus_vector(cls, music_dim, stim_rng))
        for sid, cls in classes.items()
    ] if music_dim > 0 else []

    traces: List[EdaTrace] = []
    annotations: List[AnnotationRecord] = []
    truths: Dict[Tuple[str, str], SynthTruth] = {}
    gains: Dict[str, float] = {}
    for s in range(n_subjects):
        subject = f"subj{s:03d}"
        subj_rng = np.random.default_rng([seed, 1, s])
        gains[subject] = float(subj_rng.uniform(*GAIN_RANGE))
        for j, (stimulus, cls) in enumerate(classes.items()):
            base = plan.high if cls else plan.low
            trace_seed = int(subj_rng.integers(0, 2**31 - 1))
            trace, truth = gen_trace(replace(base, seed=trace_seed), irf, subject, stimulus,
                                     gain=gains[subject])
            traces.append(trace)
            truths[trace.key] = truth
            center = ANNOTATION_CENTERS[cls]
            v, a = np.clip(center + subj_rng.normal(0.0, ANNOTATION_JITTER, size=2), 1.0, 9.0)
            annotations.append(AnnotationRecord(subject, stimulus, float(v), float(a)))
    return SynthDataset(traces, annotations, stimuli, truths, classes, gains)


def gen_from_plan(plan: SynthPlan, irf: Optional[BatemanIrf] = None) -> SynthDataset:
    return gen_dataset(plan.n_subjects, plan.traces_per_subject, plan.low, plan.high,
                       plan.music_dim, plan.seed, irf)
