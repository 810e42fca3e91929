"""
CSV 读写

- EDA CSV: 每行一条记录 `subject_id,stimulus_id,sampling_hz,s0,s1,...`，尾部列数可变
- 标注 CSV: `subject_id,stimulus_id,valence,arousal`
- 刺激特征 CSV: `stimulus_id,f0,...,f{D_m−1}`，表头决定 D_m

统一 UTF-8，兼容 LF/CRLF 与 BOM。
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from edaffect.core.errors import BadParams, ConfigError, IoError, NonFinite
from edaffect.core.model import AnnotationRecord, DecomposedEda, EdaTrace, StimulusFeatures
from edaffect.core.signal import validate_trace

EDA_HEADER = ("subject_id", "stimulus_id", "sampling_hz")
ANNOTATION_COLUMNS = ["subject_id", "stimulus_id", "valence", "arousal"]


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise BadParams(f"{where}: 无法解析数值 {text!r}") from e


def read_eda_csv(path: str | Path, validate: bool = True) -> List[EdaTrace]:
    """读取 EDA CSV，可选逐条校验"""
    path = Path(path)
    traces: List[EdaTrace] = []
    try:
        with open(path, "r", encoding="utf-8-sig", newline="") as f:
            for line_no, row in enumerate(csv.reader(f), 1):
                cells = [c.strip() for c in row]
                while cells and cells[-1] == "":
                    cells.pop()
                if not cells:
                    continue
                if cells[0] == EDA_HEADER[0]:
                    continue
                if len(cells) < 3:
                    raise BadParams(f"{path.name}:{line_no} 列数不足")
                where = f"{path.name}:{line_no}"
                rate = _parse_float(cells[2], where)
                samples = [_parse_float(c, where) for c in cells[3:]]
                trace = EdaTrace(cells[0], cells[1], rate, samples)
                traces.append(validate_trace(trace) if validate else trace)
    except OSError as e:
        raise IoError(f"读取 {path} 失败: {e}") from e
    logger.debug(f"📄 从 {path.name} 读取 {len(traces)} 条 EDA 记录")
    return traces


def write_eda_csv(traces: Iterable[EdaTrace], path: str | Path) -> Path:
    path = Path(path)
    traces = list(traces)
    width = max((t.n_samples for t in traces), default=0)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(EDA_HEADER) + [f"s{i}" for i in range(width)])
            for t in traces:
                writer.writerow([t.subject_id, t.stimulus_id, repr(t.sampling_hz)]
                                + [repr(float(v)) for v in t.samples])
    except OSError as e:
        raise IoError(f"写入 {path} 失败: {e}") from e
    return path


def read_annotations_csv(path: str | Path) -> List[AnnotationRecord]:
    path = Path(path)
    try:
        df = pd.read_csv(path, encoding="utf-8-sig",
                         dtype={"subject_id": str, "stimulus_id": str})
    except OSError as e:
        raise IoError(f"读取 {path} 失败: {e}") from e
    missing = [c for c in ANNOTATION_COLUMNS if c not in df.columns]
    if missing:
        raise ConfigError(f"{path.name} 缺少列: {missing}")
    return [
        AnnotationRecord(str(row.subject_id), str(row.stimulus_id),
                         float(row.valence), float(row.arousal))
        for row in df[ANNOTATION_COLUMNS].itertuples(index=False)
    ]


def write_annotations_csv(records: Sequence[AnnotationRecord], path: str | Path) -> Path:
    path = Path(path)
    df = pd.DataFrame(
        [(r.subject_id, r.stimulus_id, r.valence, r.arousal) for r in records],
        columns=ANNOTATION_COLUMNS,
    )
    return _write_frame(df, path)


def read_stimulus_csv(path: str | Path) -> List[StimulusFeatures]:
    """读取刺激特征表，所有行共享表头声明的维度 D_m"""
    path = Path(path)
    try:
        df = pd.read_csv(path, encoding="utf-8-sig", dtype={"stimulus_id": str})
    except OSError as e:
        raise IoError(f"读取 {path} 失败: {e}") from e
    if df.columns.empty or df.columns[0] != "stimulus_id":
        raise ConfigError(f"{path.name} 第一列必须是 stimulus_id")
    values = df.iloc[:, 1:].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFinite(f"{path.name} 含有缺失或非有限的特征值")
    return [StimulusFeatures(str(sid), values[i]) for i, sid in enumerate(df["stimulus_id"])]


def write_stimulus_csv(features: Sequence[StimulusFeatures], path: str | Path) -> Path:
    path = Path(path)
    dim = features[0].dim if features else 0
    df = pd.DataFrame(
        np.stack([f.vector for f in features]) if features else np.zeros((0, 0)),
        columns=[f"f{i}" for i in range(dim)],
    )
    df.insert(0, "stimulus_id", [f.stimulus_id for f in features])
    return _write_frame(df, path)


def write_decomposition_csv(trace: EdaTrace, dec: DecomposedEda, path: str | Path) -> Path:
    """分解结果: `t_s,origin,phasic,tonic,driver,residual`，每个采样点一行"""
    df = pd.DataFrame({
        "t_s": np.arange(trace.n_samples) / trace.sampling_hz,
        "origin": dec.origin,
        "phasic": dec.phasic,
        "tonic": dec.tonic,
        "driver": dec.driver,
        "residual": dec.residual,
    })
    return _write_frame(df, Path(path))


def _write_frame(df: pd.DataFrame, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n",
                  float_format="%.17g")
    except OSError as e:
        raise IoError(f"写入 {path} 失败: {e}") from e
    return path
