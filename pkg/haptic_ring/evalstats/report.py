# coding=utf-8
"""
评估报告 - Evaluation report

试验 CSV 读写, 合成试验数据, 按实验分析顺序汇总统计结果.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from haptic_ring.const import RATING_COLUMNS, TEXTURES, TRIAL_COLUMNS
from haptic_ring.errors import StatsInputError, StatsSchemaError
from haptic_ring.evalstats import (
    ChiSquaredResult, ConfusionMatrix, KruskalResult, KSResult, TrialRecord, build_confusion,
    chi_squared_vs_chance, kruskal_wallis, ks_normality, ratings_by_texture,
)
from haptic_ring.utils import PathLike, ensure_dir, write_frame_csv

logger = logging.getLogger('EvalStats')

# 匹配实验报告的各纹理正确率
STUDY_ACCURACY = {
    'rough_metal': 0.9, 'smooth_metal': 0.9, 'rough_foam': 0.9,
    'smooth_foam': 0.622, 'cardboard': 0.45, 'fabric': 0.45,
}
# 错选时优先混淆的纹理
CONFUSERS = {
    'smooth_foam': ('smooth_metal', 'cardboard'),
    'cardboard': ('fabric',),
    'fabric': ('cardboard',),
}
# 评分中心 (flat-bumpy, cold-hot, soft-stiff)
RATING_PROFILES = {
    'rough_metal': (80.0, 15.0, 95.0),
    'smooth_metal': (10.0, 20.0, 95.0),
    'rough_foam': (75.0, 60.0, 10.0),
    'smooth_foam': (20.0, 60.0, 25.0),
    'cardboard': (35.0, 55.0, 70.0),
    'fabric': (45.0, 65.0, 45.0),
}
RATING_SPREAD = 12.0


def _parse_row(line: int, row: Mapping[str, str]) -> TrialRecord:
    participant = row['participant'].strip()
    if not participant:
        raise StatsSchemaError('empty participant id', row=line, column='participant')
    try:
        round_no = int(row['round'])
    except ValueError:
        raise StatsSchemaError(f"round {row['round']!r} is not an integer", row=line, column='round') from None
    ratings = []
    for column in RATING_COLUMNS:
        try:
            ratings.append(float(row[column]))
        except ValueError:
            raise StatsSchemaError(f"rating {row[column]!r} is not a number", row=line, column=column) from None
    try:
        return TrialRecord(participant, round_no, row['presented'].strip(), row['selected'].strip(), tuple(ratings))
    except StatsSchemaError as e:
        raise StatsSchemaError(e.detail, row=line, column=e.column) from None


def load_trials(path: PathLike) -> List[TrialRecord]:
    """
    读取试验 CSV: participant,round,presented,selected,flat_bumpy,cold_hot,soft_stiff

    行号从表头之后的第一行记为 1.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise StatsInputError(f"trials file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise StatsSchemaError(f"{path}: unreadable trials CSV ({e})") from None
    columns = list(frame.columns)
    for column in TRIAL_COLUMNS:
        if column not in columns:
            raise StatsSchemaError(f"{path}: missing column", column=column)
    extra = [c for c in columns if c not in TRIAL_COLUMNS]
    if extra:
        raise StatsSchemaError(f"{path}: unexpected column", column=extra[0])
    trials = [_parse_row(line, row) for line, row in enumerate(frame.to_dict('records'), start=1)]
    if not trials:
        raise StatsInputError(f"{path}: no trials")
    logger.debug('loaded %d trials from %s', len(trials), path)
    return trials


def trials_frame(trials: Sequence[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [(t.participant, t.round, t.presented, t.selected) + t.ratings for t in trials],
        columns=list(TRIAL_COLUMNS),
    )


def save_trials(trials: Sequence[TrialRecord], path: PathLike) -> str:
    return write_frame_csv(path, trials_frame(trials))


def synthesize_trials(accuracies: Optional[Mapping[str, float]] = None, participants: int = 15, rounds: int = 4,
                      seed: int = 42, profiles: Optional[Mapping[str, Tuple[float, float, float]]] = None,
                      spread: float = RATING_SPREAD) -> List[TrialRecord]:
    """
    合成一组匹配实验数据

    每位参与者 rounds 轮, 每轮六个纹理乱序呈现, 第 1 轮为训练轮.
    测试轮中每个纹理的正确次数严格为 round(acc * participants * (rounds - 1)).

    Args:
        accuracies: 各纹理正确率, 默认为实验报告值
        participants: 参与者人数
        rounds: 轮数 (含训练轮)
        seed: 随机种子
        profiles: 各纹理评分中心
        spread: 评分标准差

    Returns:
        List[TrialRecord]
    """
    accuracies = dict(STUDY_ACCURACY if accuracies is None else accuracies)
    profiles = dict(RATING_PROFILES if profiles is None else profiles)
    if participants < 1 or rounds < 2:
        raise StatsInputError('need at least one participant and two rounds')
    for texture in TEXTURES:
        if not 0.0 <= accuracies.get(texture, -1.0) <= 1.0:
            raise StatsInputError(f"accuracy for {texture} must lie in [0, 1]")
        if texture not in profiles:
            raise StatsInputError(f"no rating profile for {texture}")
    rng = np.random.default_rng(seed)
    test_slots = participants * (rounds - 1)

    # 每个纹理在测试轮中的正确 / 错误标记
    correct_flags: Dict[str, List[bool]] = {}
    for texture in TEXTURES:
        hits = int(round(accuracies[texture] * test_slots))
        flags = np.zeros(test_slots, dtype=bool)
        flags[rng.permutation(test_slots)[:hits]] = True
        correct_flags[texture] = flags.tolist()

    def wrong_choice(texture: str) -> str:
        pool = CONFUSERS.get(texture) or tuple(t for t in TEXTURES if t != texture)
        return pool[int(rng.integers(len(pool)))]

    trials: List[TrialRecord] = []
    slot = {texture: 0 for texture in TEXTURES}
    for p in range(1, participants + 1):
        participant = f'P{p:02d}'
        for round_no in range(1, rounds + 1):
            for k in rng.permutation(len(TEXTURES)):
                texture = TEXTURES[int(k)]
                if round_no == 1:
                    correct = bool(rng.random() < accuracies[texture])
                else:
                    correct = correct_flags[texture][slot[texture]]
                    slot[texture] += 1
                selected = texture if correct else wrong_choice(texture)
                noise = rng.normal(0.0, spread, size=len(RATING_COLUMNS))
                ratings = np.round(np.clip(np.asarray(profiles[texture]) + noise, 0.0, 100.0), 1)
                trials.append(TrialRecord(participant, round_no, texture, selected, tuple(ratings.tolist())))
    return trials


@dataclass
class EvaluationReport:
    confusion: ConfusionMatrix
    chi_squared: ChiSquaredResult
    kruskal: Dict[str, KruskalResult]
    normality: Dict[Tuple[str, str], Optional[KSResult]] = field(default_factory=dict)
    n_trials: int = 0
    excluded_round: Optional[int] = 1

    def normality_frame(self) -> pd.DataFrame:
        rows = []
        for (texture, dimension), result in self.normality.items():
            rows.append({
                'texture': texture,
                'dimension': dimension,
                'n': result.n if result else 0,
                'D': result.statistic if result else np.nan,
                'p_value': result.p_value if result else np.nan,
                'critical_lilliefors': result.critical_lilliefors if result else np.nan,
                'reject_at_05': result.reject_at_05 if result else False,
                'reject_at_05_standard': result.reject_at_05_standard if result else False,
            })
        return pd.DataFrame(rows)

    def chi_squared_frame(self) -> pd.DataFrame:
        c = self.chi_squared
        return pd.DataFrame([{
            'statistic': c.statistic, 'n': c.n,
            'dof_independence': c.dof_independence, 'p_independence': c.p_independence,
            'dof_goodness': c.dof_goodness, 'p_goodness': c.p_goodness,
        }])

    def kruskal_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{'dimension': d, 'H': r.statistic, 'dof': r.dof, 'p_value': r.p_value}
                             for d, r in self.kruskal.items()])

    def to_text(self) -> str:
        lines = [f'trials: {self.n_trials} (evaluated {self.confusion.total}, excluded round {self.excluded_round})',
                 '', 'confusion proportions (rows = presented, columns = selected):']
        lines.append(self.confusion.to_frame(proportions=True).to_string(float_format=lambda v: f'{v:.3f}'))
        c = self.chi_squared
        lines += ['', f'chi-squared vs chance: {c.statistic:.3f} (N = {c.n})',
                  f'  dof {c.dof_independence}: p = {c.p_independence:.3g}',
                  f'  dof {c.dof_goodness}: p = {c.p_goodness:.3g}']
        rejected = [f'{t}/{d}' for (t, d), r in self.normality.items() if r is not None and r.reject_at_05]
        lines += ['', f'KS normality rejected (alpha 0.05): {", ".join(rejected) if rejected else "none"}']
        lines += ['', 'Kruskal-Wallis across textures:']
        for dimension, r in self.kruskal.items():
            lines.append(f'  {dimension:<11} H = {r.statistic:8.3f}  dof = {r.dof}  p = {r.p_value:.3g}')
        return '\n'.join(lines) + '\n'

    def write_csv(self, directory: PathLike) -> List[str]:
        directory = ensure_dir(directory)
        return [
            write_frame_csv(os.path.join(directory, 'confusion.csv'), self.confusion.to_frame().reset_index()),
            write_frame_csv(os.path.join(directory, 'chi_squared.csv'), self.chi_squared_frame()),
            write_frame_csv(os.path.join(directory, 'kruskal_wallis.csv'), self.kruskal_frame()),
            write_frame_csv(os.path.join(directory, 'ks_normality.csv'), self.normality_frame()),
        ]


def evaluate_trials(trials: Sequence[TrialRecord], exclude_round: Optional[int] = 1) -> EvaluationReport:
    """混淆矩阵 + 卡方 -> 各纹理各维度 KS 筛查 -> 各维度 Kruskal-Wallis"""
    confusion = build_confusion(trials, exclude_round)
    chi = chi_squared_vs_chance(confusion)
    normality: Dict[Tuple[str, str], Optional[KSResult]] = {}
    kruskal: Dict[str, KruskalResult] = {}
    for dimension in RATING_COLUMNS:
        groups = ratings_by_texture(trials, dimension, exclude_round)
        for texture, group in zip(TEXTURES, groups):
            try:
                normality[(texture, dimension)] = ks_normality(group)
            except StatsInputError as e:
                logger.warning('KS screen skipped for %s/%s: %s', texture, dimension, e.message)
                normality[(texture, dimension)] = None
        kruskal[dimension] = kruskal_wallis([g for g in groups if len(g)])
    return EvaluationReport(confusion, chi, kruskal, normality, len(trials), exclude_round)


def ratings_frame(trials: Sequence[TrialRecord], exclude_round: Optional[int] = 1) -> pd.DataFrame:
    """`texture` + rating columns, one row per evaluated trial."""
    rows = [(t.presented,) + t.ratings for t in trials if exclude_round is None or t.round != exclude_round]
    return pd.DataFrame(rows, columns=['texture'] + list(RATING_COLUMNS))


def compare_ratings(real: pd.DataFrame, virtual: pd.DataFrame) -> pd.DataFrame:
    """
    真实纹理与虚拟纹理评分的并列 Kruskal-Wallis

    Args:
        real: texture + 三个评分列
        virtual: 同上, 通常来自 ratings_frame(trials)

    Returns:
        DataFrame: dimension, H_real, p_real, H_virtual, p_virtual
    """
    rows = []
    for dimension in RATING_COLUMNS:
        row = {'dimension': dimension}
        for label, frame in (('real', real), ('virtual', virtual)):
            missing = [c for c in ('texture', dimension) if c not in frame.columns]
            if missing:
                raise StatsSchemaError(f"{label} ratings missing column", column=missing[0])
            groups = [frame.loc[frame['texture'] == t, dimension].to_numpy(dtype=np.float64)
                      for t in TEXTURES if (frame['texture'] == t).any()]
            result = kruskal_wallis(groups)
            row[f'H_{label}'] = result.statistic
            row[f'p_{label}'] = result.p_value
        rows.append(row)
    return pd.DataFrame(rows)
