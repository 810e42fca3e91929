"""
参数检查点

JSON 容器(orjson 写出，float64 按最短可回读表示，读回逐位一致)::

    {
      "format": "edaffect-checkpoint",
      "version": 1,
      "config": {...},
      "parameters": {"<name>": {"shape": [...], "data": [...]}},
      "buffers":    {"<name>": {"shape": [...], "data": [...]}}
    }

data 为行优先展平的数值。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
import orjson

from edaffect.core.errors import ConfigError, IoError, ShapeMismatch

CHECKPOINT_FORMAT = "edaffect-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    config: Dict[str, Any]
    parameters: Dict[str, np.ndarray]
    buffers: Dict[str, np.ndarray] = field(default_factory=dict)


def _pack(arrays: Mapping[str, np.ndarray]) -> Dict[str, Any]:
    return {
        name: {"shape": list(arr.shape), "data": np.asarray(arr, dtype=np.float64).reshape(-1).tolist()}
        for name, arr in sorted(arrays.items())
    }


def _unpack(section: Mapping[str, Any], where: str) -> Dict[str, np.ndarray]:
    out = {}
    for name, entry in section.items():
        shape = tuple(int(s) for s in entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise ShapeMismatch(f"{where}.{name}: 数据长度 {data.size} 与形状 {shape} 不符")
        out[name] = data.reshape(shape)
    return out


def dumps_checkpoint(ckpt: Checkpoint) -> bytes:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": ckpt.config,
        "parameters": _pack(ckpt.parameters),
        "buffers": _pack(ckpt.buffers),
    }
    return orjson.dumps(doc, option=orjson.OPT_SORT_KEYS)


def loads_checkpoint(raw: bytes) -> Checkpoint:
    try:
        doc = orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"检查点不是合法 JSON: {e}") from e
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"未知的检查点格式: {doc.get('format')!r}")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"不支持的检查点版本: {doc.get('version')!r}")
    return Checkpoint(
        config=dict(doc.get("config") or {}),
        parameters=_unpack(doc.get("parameters") or {}, "parameters"),
        buffers=_unpack(doc.get("buffers") or {}, "buffers"),
    )


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(dumps_checkpoint(ckpt))
    except OSError as e:
        raise IoError(f"写入检查点 {path} 失败: {e}") from e
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IoError(f"读取检查点 {path} 失败: {e}") from e
    return loads_checkpoint(raw)
