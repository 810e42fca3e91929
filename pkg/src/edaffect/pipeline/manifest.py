"""
运行清单

manifest.json 只包含配置、种子、输入摘要和结果，给定相同输入与种子时逐字节一致;
墙钟时间单独写入 timing.json。
"""
from __future__ import annotations

import hashlib
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional

import orjson

from edaffect.core.errors import IoError

MANIFEST_NAME = "manifest.json"
TIMING_NAME = "timing.json"


def file_digest(path: str | Path) -> str:
    """SHA-256 十六进制摘要"""
    sha = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                sha.update(chunk)
    except OSError as e:
        raise IoError(f"读取 {path} 失败: {e}") from e
    return sha.hexdigest()


def input_digests(paths: Mapping[str, Optional[str | Path]]) -> Dict[str, Dict[str, str]]:
    return {
        role: {"path": Path(p).name, "sha256": file_digest(p)}
        for role, p in sorted(paths.items())
        if p is not None
    }


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    except OSError as e:
        raise IoError(f"写入 {path} 失败: {e}") from e
    return path


def read_json(path: str | Path) -> Any:
    try:
        return orjson.loads(Path(path).read_bytes())
    except OSError as e:
        raise IoError(f"读取 {path} 失败: {e}") from e


def write_manifest(run_dir: str | Path, manifest: Mapping[str, Any]) -> Path:
    return write_json(Path(run_dir) / MANIFEST_NAME, dict(manifest))


class Stopwatch:
    """按阶段累计墙钟时间"""

    def __init__(self):
        self.sections: Dict[str, float] = {}

    @contextmanager
    def section(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.sections[name] = self.sections.get(name, 0.0) + time.perf_counter() - start

    def write(self, run_dir: str | Path) -> Path:
        payload = {"sections_s": self.sections, "total_s": sum(self.sections.values())}
        return write_json(Path(run_dir) / TIMING_NAME, payload)
