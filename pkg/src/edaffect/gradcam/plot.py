"""显著性图输出: 每层一对 CSV 与 SVG"""
from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Tuple

import matplotlib
import numpy as np
import pandas as pd
from loguru import logger
from matplotlib.figure import Figure

from edaffect.core.errors import IoError, ShapeMismatch
from edaffect.core.model import COMPONENTS, LabeledExample
from edaffect.gradcam.saliency import SaliencyMap

BAR_COLUMNS = 60
CURVE_COLORS = {"origin": "#1f77b4", "phasic": "#d62728", "tonic": "#2ca02c"}


def plot_stem(example: LabeledExample, dim: str, layer: str) -> str:
    return f"{example.subject_id}_{example.stimulus_id}_{dim}_{layer}"


def saliency_frame(example: LabeledExample, saliency: SaliencyMap) -> pd.DataFrame:
    length = example.length
    if saliency.weights.shape[0] != length:
        raise ShapeMismatch(f"{saliency.layer} 的长度 {saliency.weights.shape[0]} 与样本长度 {length} 不一致")
    frame = pd.DataFrame({"t": np.arange(length)})
    for i, name in enumerate(COMPONENTS):
        frame[name] = example.channels[i]
    frame[f"weight_{saliency.layer}"] = saliency.weights
    return frame


def _column_means(weights: np.ndarray, columns: int) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(0, weights.shape[0], min(columns, weights.shape[0]) + 1).astype(int)
    return np.array([weights[a:b].mean() for a, b in zip(edges[:-1], edges[1:])]), edges


def render_svg(example: LabeledExample, saliency: SaliencyMap, path: Path) -> Path:
    """三条信号曲线 + 显著性柱状条; 全零显著性不画柱"""
    t = np.arange(example.length)
    fig = Figure(figsize=(10, 2.6))
    ax = fig.subplots(1, 1)
    ax.set_gid(f"panel_{saliency.layer}")
    strip = ax.twinx()
    strip.set_ylim(0.0, 1.0)
    strip.set_yticks([])
    means, edges = _column_means(saliency.weights, BAR_COLUMNS)
    for i, value in enumerate(means):
        if value <= 0.0:
            continue
        bar = strip.bar(edges[i], value, width=edges[i + 1] - edges[i], align="edge",
                        color="#ff7f0e", alpha=0.35, linewidth=0)
        bar.patches[0].set_gid(f"saliency_bar_{i}")
    for row, name in enumerate(COMPONENTS):
        ax.plot(t, example.channels[row], color=CURVE_COLORS[name], linewidth=0.9, label=name)
    ax.set_xlim(0, max(1, example.length - 1))
    ax.set_title(f"{saliency.layer} (class {saliency.target_class})", fontsize=9)
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "edaffect"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def emit_plot(example: LabeledExample, maps: Sequence[SaliencyMap], out_dir: str | Path,
              dim: str = "arousal") -> List[Tuple[Path, Path]]:
    """每层写出 <subject>_<stimulus>_<dim>_<layer>.csv 与同名 .svg

    Returns:
        list: 按 maps 顺序的 (csv_path, svg_path)
    """
    if not maps:
        raise ShapeMismatch("至少需要一个显著性图")
    frames = [saliency_frame(example, m) for m in maps]
    out_dir = Path(out_dir)
    written: List[Tuple[Path, Path]] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for m, frame in zip(maps, frames):
            stem = plot_stem(example, dim, m.layer)
            csv_path = out_dir / f"{stem}.csv"
            svg_path = out_dir / f"{stem}.svg"
            frame.to_csv(csv_path, index=False, lineterminator="\n", float_format="%.17g")
            render_svg(example, m, svg_path)
            written.append((csv_path, svg_path))
    except OSError as e:
        raise IoError(f"写入 {out_dir} 失败: {e}") from e
    logger.info(f"📄 显著性图已写入 {out_dir}: {', '.join(p.stem for _, p in written)}")
    return written
