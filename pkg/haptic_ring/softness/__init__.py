# coding=utf-8
"""
柔软度渲染模块 - Softness Rendering Module

把按压力曲线转换为线性执行器的梯形位移指令:
- segment_phases: 划分按压 / 保持 / 抬起阶段
- compute_slopes: 最小二乘拟合按压与抬起斜率
- map_slope_to_speed: 斜率仿射映射到执行器速度
- build_profile: 生成三段梯形位移曲线
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from haptic_ring.errors import ConfigError, DegenerateIntervalError, InvalidRangeError, NoInteriorPeakError
from haptic_ring.texdata import TextureRecording, TimeSeries
from haptic_ring.utils import PathLike, write_frame_csv

logger = logging.getLogger('SoftnessRenderer')

PEAK_RTOL = 1e-4            # 平滑曲线上 "达到最大值" 的相对容差
BASELINE_FRACTION = 0.02    # 按压起点 / 抬起终点: 力回到峰值的 2% 以下


@dataclass
class SoftnessConfig:
    """柔软度渲染配置"""
    slope_range: Optional[Tuple[float, float]] = None           # N/s, None 时由纹理集合计算
    fallback_slope_range: Tuple[float, float] = (0.2, 2.0)      # N/s
    speed_range: Tuple[float, float] = (2.0, 20.0)              # mm/s
    target_displacement: float = 8.0                            # mm
    hold_duration: float = 30.0                                 # s
    lift_drop: float = 0.05                                     # δ_lift
    smoothing_window: float = 0.1                               # s
    output_rate: float = 100.0                                  # Hz

    def __post_init__(self):
        for name in ('target_displacement', 'hold_duration', 'smoothing_window', 'output_rate'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"softness.{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.lift_drop < 1:
            raise ConfigError(f"softness.lift_drop must lie in (0, 1), got {self.lift_drop}")
        for name in ('slope_range', 'fallback_slope_range', 'speed_range'):
            bounds = getattr(self, name)
            if bounds is not None and not 0 <= bounds[0] < bounds[1]:
                raise ConfigError(f"softness.{name} must be an increasing non-negative pair, got {bounds}")
        if not self.speed_range[0] > 0:
            raise ConfigError(f"softness.speed_range must start above 0 mm/s, got {self.speed_range}")


@dataclass(frozen=True)
class PressPhases:
    """按压 / 保持 / 抬起 三个连续区间 (秒)"""
    t0: float
    t_peak: float
    t_lift: float
    t_end: float
    peak_force: float = float('nan')

    def __post_init__(self):
        if not (self.t0 < self.t_peak <= self.t_lift < self.t_end):
            raise DegenerateIntervalError(
                f"phase times must satisfy t0 < t_peak <= t_lift < t_end, got "
                f"{self.t0}, {self.t_peak}, {self.t_lift}, {self.t_end}")

    @property
    def press_interval(self) -> Tuple[float, float]:
        return self.t0, self.t_peak

    @property
    def hold_interval(self) -> Tuple[float, float]:
        return self.t_peak, self.t_lift

    @property
    def lift_interval(self) -> Tuple[float, float]:
        return self.t_lift, self.t_end


@dataclass(frozen=True)
class SlopePair:
    press_slope: float      # N/s, > 0
    lift_slope: float       # N/s, < 0

    def __post_init__(self):
        if not self.press_slope > 0:
            raise DegenerateIntervalError(f"press slope must be positive, got {self.press_slope}")
        if not self.lift_slope < 0:
            raise DegenerateIntervalError(f"lift slope must be negative, got {self.lift_slope}")


@dataclass(frozen=True)
class ProfileSegment:
    duration: float         # s
    speed: float            # mm/s
    label: str = ''


@dataclass(frozen=True)
class PressureProfile:
    """梯形位移曲线: 上升 / 平台 / 下降"""
    segments: Tuple[ProfileSegment, ...]
    target_displacement: float
    hold_duration: float

    def __post_init__(self):
        object.__setattr__(self, 'segments', tuple(self.segments))
        if len(self.segments) != 3:
            raise InvalidRangeError(f"a pressure profile has exactly 3 segments, got {len(self.segments)}")
        rise, plateau, fall = self.segments
        if not (rise.speed > 0 and plateau.speed == 0 and fall.speed < 0):
            raise InvalidRangeError("segments must be rise (v>0), plateau (v=0), fall (v<0)")
        if any(s.duration < 0 for s in self.segments):
            raise InvalidRangeError("segment durations must be non-negative")

    @property
    def rise(self) -> ProfileSegment:
        return self.segments[0]

    @property
    def plateau(self) -> ProfileSegment:
        return self.segments[1]

    @property
    def fall(self) -> ProfileSegment:
        return self.segments[2]

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def lift_time(self) -> float:
        """Start of the fall segment, relative to the profile start."""
        return self.rise.duration + self.plateau.duration

    @property
    def net_displacement(self) -> float:
        return sum(s.duration * s.speed for s in self.segments)

    def speed_at(self, t: float) -> float:
        if t < 0:
            return 0.0
        start = 0.0
        for segment in self.segments:
            if t < start + segment.duration:
                return segment.speed
            start += segment.duration
        return 0.0

    def displacement_at(self, t: float) -> float:
        """Piecewise-linear displacement (mm) at t seconds after the profile start."""
        position = 0.0
        start = 0.0
        for segment in self.segments:
            if t <= start + segment.duration:
                return position + segment.speed * max(t - start, 0.0)
            position += segment.speed * segment.duration
            start += segment.duration
        return position

    def displacement_array(self, times) -> np.ndarray:
        """Vectorised `displacement_at` over the trapezoid's knots."""
        knots = np.cumsum([0.0] + [s.duration for s in self.segments])
        positions = np.cumsum([0.0] + [s.duration * s.speed for s in self.segments])
        return np.interp(np.asarray(times, dtype=np.float64), knots, positions)

    def sample(self, rate: float = 100.0) -> pd.DataFrame:
        """Uniform samples `time_s,displacement_mm,speed_mm_s`."""
        n = int(np.floor(self.total_duration * rate + 1e-9)) + 1
        times = np.arange(n) / rate
        return pd.DataFrame({
            'time_s': times,
            'displacement_mm': [self.displacement_at(t) for t in times],
            'speed_mm_s': [self.speed_at(t) for t in times],
        })

    def to_csv(self, path: PathLike, rate: float = 100.0) -> str:
        return write_frame_csv(path, self.sample(rate))

    def to_dict(self) -> dict:
        return {
            'segments': [{'label': s.label, 'duration_s': s.duration, 'speed_mm_s': s.speed} for s in self.segments],
            'target_displacement_mm': self.target_displacement,
            'hold_duration_s': self.hold_duration,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> PressureProfile:
        segments = [ProfileSegment(float(s['duration_s']), float(s['speed_mm_s']), s.get('label', ''))
                    for s in payload['segments']]
        return cls(tuple(segments), float(payload['target_displacement_mm']), float(payload['hold_duration_s']))


def _smooth(force: TimeSeries, window_s: float) -> np.ndarray:
    window = max(1, int(round(window_s * force.sample_rate)))
    return pd.Series(force.values).rolling(window, center=True, min_periods=1).mean().to_numpy()


def segment_phases(force: TimeSeries, lift_drop: float = 0.05, smoothing_window: float = 0.1) -> PressPhases:
    """
    划分按压阶段

    峰值: 平滑曲线首次达到最大值处, 再在半个平滑窗口内取原始力的最大值.
    抬起: 峰值之后平滑力首次低于 (1 - δ_lift)·峰值.

    Args:
        force: 按压力 (N)
        lift_drop: δ_lift
        smoothing_window: 移动平均窗口, 秒

    Returns:
        PressPhases
    """
    smoothed = _smooth(force, smoothing_window)
    raw = force.values
    n = len(raw)
    peak_smoothed = float(np.max(smoothed))
    if not peak_smoothed > 0:
        raise NoInteriorPeakError("force trace never rises above zero")
    candidate = int(np.argmax(smoothed >= (1.0 - PEAK_RTOL) * peak_smoothed))
    half = max(1, int(round(smoothing_window * force.sample_rate)) // 2)
    lo, hi = max(0, candidate - half), min(n, candidate + half + 1)
    i_peak = lo + int(np.argmax(raw[lo:hi]))
    if i_peak == 0 or i_peak == n - 1:
        raise NoInteriorPeakError(f"force maximum lies on the trace boundary (t={force.timestamps[i_peak]})")
    peak = float(raw[i_peak])

    baseline = BASELINE_FRACTION * peak
    before = np.flatnonzero(smoothed[:i_peak] <= baseline)
    i_start = int(before[-1]) if len(before) else 0

    after = np.flatnonzero(smoothed[i_peak + 1:] < (1.0 - lift_drop) * peak)
    if not len(after):
        raise DegenerateIntervalError("force never drops after the peak; no lift-off found")
    i_lift = i_peak + 1 + int(after[0])
    settled = np.flatnonzero(smoothed[i_lift + 1:] <= baseline)
    i_end = i_lift + 1 + int(settled[0]) if len(settled) else n - 1
    if i_end <= i_lift:
        raise DegenerateIntervalError("lift-off found at the end of the trace; no lift interval")

    t = force.timestamps
    return PressPhases(float(t[i_start]), float(t[i_peak]), float(t[i_lift]), float(t[i_end]), peak)


def _fit_slope(force: TimeSeries, interval: Tuple[float, float], label: str) -> float:
    t = force.timestamps
    eps = 1e-9 * force.dt
    mask = (t >= interval[0] - eps) & (t <= interval[1] + eps)
    if np.count_nonzero(mask) < 2:
        raise DegenerateIntervalError(f"{label} interval {interval} holds fewer than 2 samples")
    slope, _ = np.polyfit(t[mask] - interval[0], force.values[mask], 1)
    return float(slope)


def compute_slopes(force: TimeSeries, phases: PressPhases) -> SlopePair:
    """Least-squares force slopes over the press and lift intervals."""
    return SlopePair(_fit_slope(force, phases.press_interval, 'press'),
                     _fit_slope(force, phases.lift_interval, 'lift'))


def map_slope_to_speed(slope: float, slope_range: Sequence[float], speed_range: Sequence[float]) -> float:
    """
    斜率 -> 执行器速度, 先截断到 slope_range 再仿射映射

    v = v_min + (slope - s_min)·(v_max - v_min)/(s_max - s_min)
    """
    s_min, s_max = slope_range
    v_min, v_max = speed_range
    if not s_min < s_max:
        raise InvalidRangeError(f"empty slope range [{s_min}, {s_max}]")
    if not v_min < v_max:
        raise InvalidRangeError(f"empty speed range [{v_min}, {v_max}]")
    clamped = min(max(slope, s_min), s_max)
    return v_min + (clamped - s_min) * (v_max - v_min) / (s_max - s_min)


def build_profile(slopes: SlopePair, config: SoftnessConfig,
                  slope_range: Optional[Tuple[float, float]] = None) -> PressureProfile:
    """
    生成梯形位移曲线

    上升速度来自按压斜率, 下降速度来自 |抬起斜率|, 平台速度严格为 0.
    """
    slope_range = slope_range or config.slope_range or config.fallback_slope_range
    rise_speed = map_slope_to_speed(slopes.press_slope, slope_range, config.speed_range)
    fall_speed = map_slope_to_speed(abs(slopes.lift_slope), slope_range, config.speed_range)
    target = config.target_displacement
    if not rise_speed > 0 or not fall_speed > 0:
        raise InvalidRangeError(f"actuator speeds must be positive, got {rise_speed}, {fall_speed}")
    return PressureProfile(
        segments=(ProfileSegment(target / rise_speed, rise_speed, 'rise'),
                  ProfileSegment(config.hold_duration, 0.0, 'plateau'),
                  ProfileSegment(target / fall_speed, -fall_speed, 'fall')),
        target_displacement=target,
        hold_duration=config.hold_duration,
    )


def compute_slope_range(press_slopes: Iterable[float],
                        fallback: Tuple[float, float] = (0.2, 2.0)) -> Tuple[float, float]:
    """
    纹理集合的按压斜率范围 [min, max]

    集合无法给出非空范围时 (单个纹理或斜率全部相等) 使用 fallback.
    """
    values: List[float] = [float(s) for s in press_slopes]
    if len(values) >= 2:
        low, high = min(values), max(values)
        if high - low > 1e-12 * max(abs(high), 1.0):
            return low, high
    logger.info('slope range falls back to %s (set of %d textures)', fallback, len(values))
    return tuple(fallback)


@dataclass
class SoftnessResult:
    phases: PressPhases
    slopes: SlopePair
    profile: PressureProfile
    slope_range: Tuple[float, float] = field(default=(0.0, 0.0))


def analyze_press(rec: TextureRecording, config: SoftnessConfig) -> Tuple[PressPhases, SlopePair]:
    phases = segment_phases(rec.press_force, config.lift_drop, config.smoothing_window)
    return phases, compute_slopes(rec.press_force, phases)


def render_softness(rec: TextureRecording, config: SoftnessConfig,
                    slope_range: Optional[Tuple[float, float]] = None) -> SoftnessResult:
    """Press trace -> trapezoidal displacement profile."""
    phases, slopes = analyze_press(rec, config)
    slope_range = slope_range or config.slope_range or config.fallback_slope_range
    profile = build_profile(slopes, config, slope_range)
    logger.debug('%s: press %.4g N/s, lift %.4g N/s -> rise %.4g mm/s, fall %.4g mm/s', rec.name,
                 slopes.press_slope, slopes.lift_slope, profile.rise.speed, -profile.fall.speed)
    return SoftnessResult(phases, slopes, profile, tuple(slope_range))


def write_profile(profile: PressureProfile, directory: PathLike, name: str, rate: float = 100.0) -> str:
    return profile.to_csv(os.path.join(directory, f'{name}_pressure.csv'), rate)
