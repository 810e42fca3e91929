"""被试独立的交叉验证划分"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np

from edaffect.core.errors import LeakageDetected, TooFew


@dataclass(frozen=True)
class FoldPlan:
    """folds[i] 是第 i 折的测试被试集合

    构造时不做校验，cross_validate 在每一折上检查训练/测试被试是否相交。
    """
    folds: Tuple[FrozenSet[str], ...]

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def subjects(self) -> List[str]:
        return sorted(set().union(*self.folds)) if self.folds else []

    def sizes(self) -> List[int]:
        return [len(f) for f in self.folds]

    def train_subjects(self, fold_id: int) -> FrozenSet[str]:
        others = [f for i, f in enumerate(self.folds) if i != fold_id]
        return frozenset().union(*others) if others else frozenset()

    def check_disjoint(self, fold_id: int) -> None:
        overlap = self.train_subjects(fold_id) & self.folds[fold_id]
        if overlap:
            raise LeakageDetected(f"第 {fold_id} 折的被试同时出现在训练集: {sorted(overlap)}")

    def to_dict(self) -> Dict[str, List[List[str]]]:
        return {"folds": [sorted(f) for f in self.folds]}

    @classmethod
    def from_lists(cls, folds: Iterable[Iterable[str]]) -> "FoldPlan":
        return cls(tuple(frozenset(f) for f in folds))


def make_fold_plan(subjects: Sequence[str], k: int = 10, seed: int = 0) -> FoldPlan:
    """对排序后的被试做带种子的洗牌，再轮流分到 k 折"""
    unique = sorted(set(subjects))
    if k < 2:
        raise TooFew(f"折数至少为 2，实际 {k}")
    if len(unique) < k:
        raise TooFew(f"{len(unique)} 个被试不足以划分 {k} 折")
    order = np.random.default_rng(seed).permutation(len(unique))
    return FoldPlan(tuple(frozenset(unique[j] for j in order[i::k]) for i in range(k)))


def select_subjects(subjects: Sequence[str], fraction: float, seed: int = 0) -> List[str]:
    """被试递增实验: 按种子抽取 ceil(fraction·n) 个被试"""
    unique = sorted(set(subjects))
    if fraction >= 1.0:
        return unique
    count = max(1, int(np.ceil(fraction * len(unique))))
    picked = np.random.default_rng(seed).choice(len(unique), size=count, replace=False)
    return sorted(unique[i] for i in picked)


def plan_for_subjects(subjects: Sequence[str], folds: int = 10, fraction: float = 1.0,
                      seed: int = 0) -> FoldPlan:
    """先按比例抽被试，再划分 min(folds, 被试数) 折(至少 2 折)"""
    selected = select_subjects(subjects, fraction, seed)
    return make_fold_plan(selected, max(2, min(folds, len(selected))), seed)
