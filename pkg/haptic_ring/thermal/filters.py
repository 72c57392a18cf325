# coding=utf-8
"""
零相位低通滤波 - Zero-phase low-pass filtering

二阶 Butterworth, 前向 + 反向各滤一次 (sosfiltfilt), 不移动接触起点.
"""
from __future__ import annotations

import numpy as np
from scipy import signal

from haptic_ring.errors import FilterDesignError
from haptic_ring.texdata import TimeSeries

FILTER_ORDER = 2


def design_lowpass(cutoff_hz: float, sample_rate: float) -> np.ndarray:
    """Second-order sections of the Butterworth low-pass."""
    nyquist = sample_rate / 2.0
    if not 0 < cutoff_hz < nyquist:
        raise FilterDesignError(
            f"cutoff {cutoff_hz} Hz must lie in (0, {nyquist:.6g}) Hz for a {sample_rate:.6g} Hz trace")
    return signal.butter(FILTER_ORDER, cutoff_hz, btype='low', fs=sample_rate, output='sos')


def lowpass(series: TimeSeries, cutoff_hz: float) -> TimeSeries:
    """
    零相位低通

    Args:
        series: 输入序列
        cutoff_hz: 截止频率, 必须低于 Nyquist

    Returns:
        TimeSeries: 同一时间轴上的滤波结果, 直流增益为 1
    """
    sos = design_lowpass(cutoff_hz, series.sample_rate)
    padlen = min(3 * (2 * len(sos) + 1), len(series) - 1)
    filtered = signal.sosfiltfilt(sos, series.values, padlen=padlen)
    return series.with_values(filtered)
