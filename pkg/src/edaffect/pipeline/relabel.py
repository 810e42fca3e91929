"""
按被试把 1–9 的效价/唤醒评分二值化

每个被试的评分点做 k=2 的 k-means，两个中心的中点作为阈值，
严格大于阈值记为 1(高)，等于阈值记为 0。聚类退化时该维度阈值回退到 5。
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.cluster import KMeans

from edaffect.core.errors import BadParams, TooFew
from edaffect.core.model import AnnotationRecord, BinaryLabels

FALLBACK_THRESHOLD = 5.0
MAX_LLOYD_ITER = 100


@dataclass(frozen=True)
class RelabelResult:
    labels: Dict[str, BinaryLabels]
    thresholds: Tuple[float, float]
    fallback: Tuple[bool, bool] = field(default=(False, False))


def _extreme_points(points: np.ndarray) -> np.ndarray:
    """按 (v+a, v, a) 字典序取最小点和最大点作为初始中心"""
    order = np.lexsort(tuple(points[:, ::-1].T) + (points.sum(axis=1),))
    return points[[order[0], order[-1]]]


def _two_means(points: np.ndarray) -> np.ndarray:
    """确定性初始化的 Lloyd k-means，返回两个中心"""
    init = _extreme_points(points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=2, init=init, n_init=1, max_iter=MAX_LLOYD_ITER,
                    tol=0.0, algorithm="lloyd").fit(points)
    return km.cluster_centers_


def relabel_subject(records: Sequence[AnnotationRecord], mode: str = "joint") -> RelabelResult:
    """对一个被试的全部标注做二值化

    Args:
        records: 同一被试的标注(至少 2 条)
        mode: joint 在 (valence, arousal) 平面上聚类; per_dimension 每个维度单独一维聚类

    Returns:
        RelabelResult: stimulus_id → BinaryLabels，以及 (v_thr, a_thr)
    """
    if len(records) < 2:
        raise TooFew(f"至少需要 2 条标注，实际 {len(records)}")
    if mode not in ("joint", "per_dimension"):
        raise BadParams(f"未知的 relabel_mode: {mode}")

    points = np.array([[r.valence, r.arousal] for r in records], dtype=np.float64)
    thresholds = [FALLBACK_THRESHOLD, FALLBACK_THRESHOLD]
    fallback = [True, True]

    if mode == "joint":
        if len(np.unique(points, axis=0)) >= 2:
            centers = _two_means(points)
            for j in range(2):
                thresholds[j] = float((centers[0, j] + centers[1, j]) / 2.0)
                fallback[j] = False
    else:
        for j in range(2):
            column = points[:, j:j + 1]
            if np.ptp(column) > 0:
                centers = _two_means(column)
                thresholds[j] = float((centers[0, 0] + centers[1, 0]) / 2.0)
                fallback[j] = False

    # 某一维全部落在阈值同侧时视为退化
    for j in range(2):
        if not fallback[j]:
            high = points[:, j] > thresholds[j]
            if high.all() or not high.any():
                thresholds[j] = FALLBACK_THRESHOLD
                fallback[j] = True

    labels = {
        r.stimulus_id: BinaryLabels(
            int(r.valence > thresholds[0]),
            int(r.arousal > thresholds[1]),
        )
        for r in records
    }
    return RelabelResult(labels, (thresholds[0], thresholds[1]), (fallback[0], fallback[1]))


def relabel_all(records: Sequence[AnnotationRecord], mode: str = "joint") -> Dict[Tuple[str, str], BinaryLabels]:
    """按被试分组后逐个二值化，返回 (subject_id, stimulus_id) → BinaryLabels"""
    by_subject: Dict[str, list] = {}
    for r in records:
        by_subject.setdefault(r.subject_id, []).append(r)
    out: Dict[Tuple[str, str], BinaryLabels] = {}
    for subject in sorted(by_subject):
        result = relabel_subject(by_subject[subject], mode)
        for stimulus, labels in result.labels.items():
            out[(subject, stimulus)] = labels
    return out

