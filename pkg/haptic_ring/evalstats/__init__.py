# coding=utf-8
"""
评估统计模块 - Evaluation Statistics Module

匹配实验与形容词评分的统计:
- 混淆矩阵 (行 = 呈现的虚拟纹理, 列 = 选择的真实纹理)
- Pearson 卡方检验, 期望为 1/6 随机水平
- Kolmogorov-Smirnov 正态性筛查 (参数由样本估计)
- Kruskal-Wallis 秩和检验
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from haptic_ring.const import RATING_COLUMNS, TEXTURES
from haptic_ring.errors import StatsInputError, StatsSchemaError

logger = logging.getLogger('EvalStats')

# 参数估计后的 KS 渐近临界值系数 (alpha = 0.05)
LILLIEFORS_COEF_05 = 0.886
KS_COEF_05 = 1.358


@dataclass(frozen=True)
class TrialRecord:
    """一次匹配试验: 呈现纹理, 选择纹理, 三维评分 (0-100)"""
    participant: str
    round: int
    presented: str
    selected: str
    ratings: Tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, 'ratings', tuple(float(r) for r in self.ratings))
        if len(self.ratings) != len(RATING_COLUMNS):
            raise StatsSchemaError(f"expected {len(RATING_COLUMNS)} ratings, got {len(self.ratings)}")
        for column, value in zip(RATING_COLUMNS, self.ratings):
            if not (math.isfinite(value) and 0.0 <= value <= 100.0):
                raise StatsSchemaError(f"rating {value} outside [0, 100]", column=column)
        for column in ('presented', 'selected'):
            if getattr(self, column) not in TEXTURES:
                raise StatsSchemaError(f"unknown texture {getattr(self, column)!r}", column=column)
        if self.round < 1:
            raise StatsSchemaError(f"round must be >= 1, got {self.round}", column='round')

    @property
    def correct(self) -> bool:
        return self.presented == self.selected

    def rating(self, dimension: str) -> float:
        return self.ratings[RATING_COLUMNS.index(dimension)]


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray
    labels: Tuple[str, ...] = TEXTURES

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        size = len(self.labels)
        if counts.shape != (size, size) or np.any(counts < 0):
            raise StatsInputError(f"confusion counts must be a non-negative {size}x{size} matrix")
        counts.flags.writeable = False
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'labels', tuple(self.labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def proportions(self) -> np.ndarray:
        """Row-normalised counts; empty rows stay zero."""
        totals = self.row_totals.astype(np.float64)
        out = np.zeros(self.counts.shape)
        np.divide(self.counts, totals[:, None], out=out, where=totals[:, None] > 0)
        return out

    def accuracy(self) -> Dict[str, float]:
        return {label: float(p) for label, p in zip(self.labels, np.diag(self.proportions))}

    def to_frame(self, proportions: bool = False) -> pd.DataFrame:
        values = self.proportions if proportions else self.counts
        frame = pd.DataFrame(values, index=list(self.labels), columns=list(self.labels))
        frame.index.name = 'presented'
        return frame


@dataclass(frozen=True)
class ChiSquaredResult:
    statistic: float
    n: int
    dof_independence: int       # (r-1)(c-1)
    p_independence: float
    dof_goodness: int           # sum over rows of (c-1)
    p_goodness: float

    def as_tuple(self) -> Tuple[float, int, int]:
        return self.statistic, self.dof_independence, self.n


@dataclass(frozen=True)
class KruskalResult:
    statistic: float
    dof: int
    p_value: float

    def as_tuple(self) -> Tuple[float, int]:
        return self.statistic, self.dof


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n: int
    p_value: float
    critical_lilliefors: float
    critical_standard: float

    @property
    def reject_at_05(self) -> bool:
        return self.statistic > self.critical_lilliefors

    @property
    def reject_at_05_standard(self) -> bool:
        return self.statistic > self.critical_standard

    def as_tuple(self) -> Tuple[float, bool]:
        return self.statistic, self.reject_at_05


def build_confusion(trials: Iterable[TrialRecord], exclude_round: Optional[int] = 1,
                    labels: Sequence[str] = TEXTURES) -> ConfusionMatrix:
    """
    统计混淆矩阵, 剔除训练轮

    Args:
        trials: 试验记录
        exclude_round: 剔除的轮次 (None 表示全部保留)
        labels: 纹理顺序

    Returns:
        ConfusionMatrix
    """
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for trial in trials:
        if exclude_round is not None and trial.round == exclude_round:
            continue
        counts[index[trial.presented], index[trial.selected]] += 1
    if not counts.sum():
        raise StatsInputError(f"no trials left after excluding round {exclude_round}")
    return ConfusionMatrix(counts, tuple(labels))


def chi_squared_vs_chance(matrix: ConfusionMatrix) -> ChiSquaredResult:
    """Pearson 卡方: 每个单元的期望为 行合计 / 类别数"""
    counts = matrix.counts.astype(np.float64)
    rows, cols = counts.shape
    totals = counts.sum(axis=1)
    if np.any(totals == 0):
        empty = [matrix.labels[i] for i in np.flatnonzero(totals == 0)]
        raise StatsInputError(f"zero expected count: no trials presented {', '.join(empty)}")
    expected = np.repeat(totals[:, None] / cols, cols, axis=1)
    statistic = float(np.sum((counts - expected) ** 2 / expected))
    dof_independence = (rows - 1) * (cols - 1)
    dof_goodness = rows * (cols - 1)
    return ChiSquaredResult(
        statistic=statistic,
        n=matrix.total,
        dof_independence=dof_independence,
        p_independence=float(stats.chi2.sf(statistic, dof_independence)),
        dof_goodness=dof_goodness,
        p_goodness=float(stats.chi2.sf(statistic, dof_goodness)),
    )


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KruskalResult:
    """秩和检验 (含结修正); 全部取值相同时 H = 0, p = 1"""
    arrays = [np.asarray(g, dtype=np.float64).reshape(-1) for g in groups]
    if len(arrays) < 2:
        raise StatsInputError(f"Kruskal-Wallis needs at least 2 groups, got {len(arrays)}")
    if any(len(a) == 0 for a in arrays):
        raise StatsInputError("Kruskal-Wallis groups must be non-empty")
    dof = len(arrays) - 1
    pooled = np.concatenate(arrays)
    if np.all(pooled == pooled[0]):
        return KruskalResult(0.0, dof, 1.0)
    statistic, p_value = stats.kruskal(*arrays)
    return KruskalResult(float(statistic), dof, float(p_value))


def ks_normality(sample: Sequence[float]) -> KSResult:
    """
    单样本 KS 正态性检验, 均值与标准差由样本估计

    reject_at_05 使用参数估计后的临界值 0.886/sqrt(n); 标准临界值 1.358/sqrt(n) 一并给出.
    """
    values = np.asarray(sample, dtype=np.float64).reshape(-1)
    n = len(values)
    if n < 5:
        raise StatsInputError(f"KS normality needs at least 5 samples, got {n}")
    std = float(np.std(values, ddof=1))
    if not std > 0:
        raise StatsInputError("KS normality undefined for a zero-variance sample")
    result = stats.kstest(values, 'norm', args=(float(np.mean(values)), std))
    root_n = math.sqrt(n)
    return KSResult(float(result.statistic), n, float(result.pvalue),
                    LILLIEFORS_COEF_05 / root_n, KS_COEF_05 / root_n)


def ratings_by_texture(trials: Iterable[TrialRecord], dimension: str, exclude_round: Optional[int] = 1,
                       labels: Sequence[str] = TEXTURES) -> List[np.ndarray]:
    """Ratings of one dimension grouped by presented texture, in label order."""
    if dimension not in RATING_COLUMNS:
        raise StatsInputError(f"unknown rating dimension {dimension!r}")
    grouped: Dict[str, List[float]] = {label: [] for label in labels}
    for trial in trials:
        if exclude_round is not None and trial.round == exclude_round:
            continue
        grouped[trial.presented].append(trial.rating(dimension))
    return [np.array(grouped[label]) for label in labels]


from haptic_ring.evalstats.report import (  # noqa: E402
    EvaluationReport, compare_ratings, evaluate_trials, load_trials, save_trials, synthesize_trials,
)

__all__ = [
    'TrialRecord', 'ConfusionMatrix', 'ChiSquaredResult', 'KruskalResult', 'KSResult', 'build_confusion',
    'chi_squared_vs_chance', 'kruskal_wallis', 'ks_normality', 'ratings_by_texture', 'EvaluationReport',
    'compare_ratings', 'evaluate_trials', 'load_trials', 'save_trials', 'synthesize_trials',
]
