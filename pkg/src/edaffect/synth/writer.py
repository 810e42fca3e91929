"""把合成语料写成与真实数据相同的 CSV 布局，另附 truth/ 真值目录"""
from __future__ import annotations

from pathlib import Path
from typing import Dict

import numpy as np
import pandas as pd
from loguru import logger

from edaffect.core.errors import IoError
from edaffect.core.io import write_annotations_csv, write_eda_csv, write_stimulus_csv
from edaffect.synth.generator import SynthDataset

EDA_FILE = "eda.csv"
ANNOTATION_FILE = "annotations.csv"
MUSIC_FILE = "music.csv"
TRUTH_DIR = "truth"


def write_synth_corpus(dataset: SynthDataset, out_dir: str | Path) -> Dict[str, Path]:
    """写出 eda.csv / annotations.csv / music.csv(有刺激特征时) / truth/*.csv"""
    out_dir = Path(out_dir)
    paths = {
        "eda": write_eda_csv(dataset.traces, out_dir / EDA_FILE),
        "annotations": write_annotations_csv(dataset.annotations, out_dir / ANNOTATION_FILE),
    }
    if dataset.stimuli:
        paths["music"] = write_stimulus_csv(dataset.stimuli, out_dir / MUSIC_FILE)

    truth_dir = out_dir / TRUTH_DIR
    for trace in dataset.traces:
        truth = dataset.truths[trace.key]
        frame = pd.DataFrame({
            "t_s": np.arange(trace.n_samples) / trace.sampling_hz,
            "driver": truth.driver,
            "phasic": truth.true_phasic,
            "tonic": truth.true_tonic,
            "noise": truth.noise,
        })
        path = truth_dir / f"{trace.subject_id}_{trace.stimulus_id}.csv"
        try:
            truth_dir.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
        except OSError as e:
            raise IoError(f"写入 {path} 失败: {e}") from e
    paths["truth"] = truth_dir
    logger.info(f"✅ 合成语料已写入 {out_dir}: {len(dataset.traces)} 条记录")
    return paths
