"""
语料加载与样本组装

语料 = EDA 记录 + 标注 + 可选的刺激特征。组装时逐条分解、二值化并对齐刺激特征。
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from edaffect.core.errors import ConfigError, EmptySet
from edaffect.core.io import read_annotations_csv, read_eda_csv, read_stimulus_csv
from edaffect.core.model import AnnotationRecord, EdaTrace, LabeledExample, StimulusFeatures
from edaffect.core.signal import zscore_columns
from edaffect.cvxeda import BatemanIrf, CvxedaConfig
from edaffect.pipeline.config import PipelineConfig
from edaffect.pipeline.preprocess import preprocess
from edaffect.pipeline.relabel import relabel_all


@dataclass
class Corpus:
    traces: List[EdaTrace]
    annotations: List[AnnotationRecord]
    stimuli: List[StimulusFeatures] = field(default_factory=list)

    @property
    def subjects(self) -> List[str]:
        return sorted({t.subject_id for t in self.traces})


def load_corpus(eda_path: str | Path, annotations_path: str | Path,
                music_path: str | Path | None = None) -> Corpus:
    traces = read_eda_csv(eda_path)
    annotations = read_annotations_csv(annotations_path)
    stimuli = read_stimulus_csv(music_path) if music_path else []
    logger.info(
        f"📄 载入 {len(traces)} 条记录、{len(annotations)} 条标注、{len(stimuli)} 个刺激特征"
    )
    return Corpus(traces, annotations, stimuli)


def normalized_stimuli(stimuli: Sequence[StimulusFeatures]) -> Dict[str, np.ndarray]:
    """刺激特征按列跨刺激 z-score"""
    if not stimuli:
        return {}
    dims = {s.dim for s in stimuli}
    if len(dims) != 1:
        raise ConfigError(f"刺激特征维度不一致: {sorted(dims)}")
    matrix = zscore_columns(np.stack([s.vector for s in stimuli]))
    return {s.stimulus_id: matrix[i] for i, s in enumerate(stimuli)}


def assemble_examples(corpus: Corpus, irf: Optional[BatemanIrf] = None,
                      cvx_cfg: Optional[CvxedaConfig] = None, input_len: int = 1200,
                      pipeline: Optional[PipelineConfig] = None,
                      use_music: bool = False) -> List[LabeledExample]:
    """把语料组装成 LabeledExample 列表，顺序与 corpus.traces 一致

    没有标注(或要求刺激特征而缺失)的记录会被跳过并记录 WARNING。
    """
    pipeline = pipeline or PipelineConfig()
    labels = relabel_all(corpus.annotations, pipeline.relabel_mode)
    music = normalized_stimuli(corpus.stimuli) if use_music else {}

    usable: List[EdaTrace] = []
    for t in corpus.traces:
        if t.key not in labels:
            logger.warning(f"⚠️ {t.subject_id}/{t.stimulus_id} 没有标注，跳过")
        elif use_music and t.stimulus_id not in music:
            logger.warning(f"⚠️ 刺激 {t.stimulus_id} 没有特征向量，跳过")
        else:
            usable.append(t)
    if not usable:
        raise EmptySet("没有可用的样本")

    def build(trace: EdaTrace) -> LabeledExample:
        return LabeledExample(
            channels=preprocess(trace, irf, cvx_cfg, input_len, pipeline.trim_s),
            labels=labels[trace.key],
            subject_id=trace.subject_id,
            stimulus_id=trace.stimulus_id,
            music=music.get(trace.stimulus_id) if use_music else None,
        )

    if pipeline.jobs > 1:
        with ThreadPoolExecutor(max_workers=pipeline.jobs) as executor:
            examples = list(executor.map(build, usable))
    else:
        examples = [build(t) for t in usable]
    logger.info(f"✅ 组装完成: {len(examples)} 个样本，{len({e.subject_id for e in examples})} 个被试")
    return examples


def stack_examples(examples: Sequence[LabeledExample], dim: str
                   ) -> Tuple[np.ndarray, Optional[np.ndarray], np.ndarray]:
    """堆叠为 (X [n, 3, L], music [n, D_m] 或 None, y [n])"""
    if not examples:
        raise EmptySet("样本集为空")
    x = np.stack([e.channels for e in examples])
    has_music = [e.music is not None for e in examples]
    if any(has_music) and not all(has_music):
        raise ConfigError("样本集中只有部分样本带刺激特征")
    music = np.stack([e.music for e in examples]) if all(has_music) else None
    y = np.array([e.label(dim) for e in examples], dtype=np.int64)
    return x, music, y
