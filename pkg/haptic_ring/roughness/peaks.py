# coding=utf-8
"""
扫描线峰值检测 - Scanline peak detection

局部极值 + 显著度 (prominence) 筛选 + 最小间隔贪心保留 + 极大/极小交替修复.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.signal import find_peaks, peak_prominences

from haptic_ring.errors import InvalidRangeError


@dataclass(frozen=True, eq=False)
class PeakSet:
    """极大值 (关阀) 与极小值 (开阀) 的像素位置"""
    maxima: np.ndarray
    minima: np.ndarray
    max_prominences: np.ndarray
    min_prominences: np.ndarray
    length: int

    def __len__(self):
        return len(self.maxima) + len(self.minima)

    def merged(self) -> List[Tuple[int, bool]]:
        """(index, is_maximum) pairs in pixel order."""
        events = [(int(i), True) for i in self.maxima] + [(int(i), False) for i in self.minima]
        return sorted(events)

    @classmethod
    def empty(cls, length: int) -> PeakSet:
        none = np.zeros(0, dtype=np.int64)
        return cls(none, none, np.zeros(0), np.zeros(0), length)


def min_separation_px(speed: float, f_max: float, mm_per_pixel: float) -> int:
    """Pixels traversed in half a valve period: ceil(speed / (2·f_max·mm_per_pixel))."""
    return max(1, int(np.ceil(speed / (2.0 * f_max * mm_per_pixel) - 1e-9)))


def _select(values: np.ndarray, min_separation: int, min_prominence: float) -> Tuple[np.ndarray, np.ndarray]:
    candidates, _ = find_peaks(values)
    if not len(candidates):
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    prominences = peak_prominences(values, candidates)[0]
    keep = prominences >= min_prominence
    candidates, prominences = candidates[keep], prominences[keep]
    # 按显著度降序贪心, 同显著度取位置靠前者
    order = np.lexsort((candidates, -prominences))
    kept: List[int] = []
    for k in order:
        index = candidates[k]
        if all(abs(index - candidates[j]) >= min_separation for j in kept):
            kept.append(k)
    kept.sort(key=lambda j: candidates[j])
    return candidates[kept].astype(np.int64), prominences[kept]


def detect_peaks(intensities, min_separation_px: int, min_prominence: float) -> PeakSet:
    """
    检测扫描线上的局部极大与极小

    Args:
        intensities: 一维信号 (或 ScanSignal)
        min_separation_px: 同类峰值最小间隔
        min_prominence: 显著度下限

    Returns:
        PeakSet: 交替排列的极大 / 极小
    """
    values = np.asarray(getattr(intensities, 'intensities', intensities), dtype=np.float64)
    if min_separation_px < 1:
        raise InvalidRangeError(f"min_separation_px must be >= 1, got {min_separation_px}")
    if min_prominence < 0:
        raise InvalidRangeError(f"min_prominence must be >= 0, got {min_prominence}")
    if len(values) < 3:
        return PeakSet.empty(len(values))
    maxima, max_prom = _select(values, min_separation_px, min_prominence)
    minima, min_prom = _select(-values, min_separation_px, min_prominence)

    # 交替修复: 相邻同类峰值保留显著度更高者
    events = sorted([(int(i), True, float(p)) for i, p in zip(maxima, max_prom)]
                    + [(int(i), False, float(p)) for i, p in zip(minima, min_prom)])
    stack: List[Tuple[int, bool, float]] = []
    for event in events:
        if stack and stack[-1][1] == event[1]:
            if event[2] > stack[-1][2]:
                stack[-1] = event
        else:
            stack.append(event)
    kept_max = [e for e in stack if e[1]]
    kept_min = [e for e in stack if not e[1]]
    return PeakSet(
        maxima=np.array([e[0] for e in kept_max], dtype=np.int64),
        minima=np.array([e[0] for e in kept_min], dtype=np.int64),
        max_prominences=np.array([e[2] for e in kept_max]),
        min_prominences=np.array([e[2] for e in kept_min]),
        length=len(values),
    )
