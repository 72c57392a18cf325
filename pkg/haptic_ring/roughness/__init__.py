# coding=utf-8
"""
粗糙度渲染模块 - Roughness Rendering Module

把表面图像转换为快速阀的定时开关方波:
- mean_filter: 均值滤波 (边缘复制)
- extract_scanline: 取图像中间高度的一行
- detect_peaks: 显著度峰值检测 (见 peaks.py)
- build_wave: 极小 -> 开阀, 极大 -> 关阀, 以 50 mm/s 把像素换算为时间
- cap_frequency: 把过密的切换替换为 f_max 的均匀方波
- render_roughness: 全流程, 不足 10 s 时周期平铺
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy import ndimage

from haptic_ring.const import ValveState
from haptic_ring.errors import ConfigError, InvalidRangeError, InvalidTraceError
from haptic_ring.roughness.peaks import PeakSet, detect_peaks, min_separation_px
from haptic_ring.texdata import SurfaceImage, TextureRecording
from haptic_ring.utils import PathLike, write_frame_csv

logger = logging.getLogger('RoughnessRenderer')

SLIDE_SPEED = 50.0          # mm/s
VALVE_F_MAX = 300.0         # Hz
GAP_RTOL = 1e-9


@dataclass
class RoughnessConfig:
    """粗糙度渲染配置"""
    kernel_px: int = 5
    prominence_fraction: float = 0.05       # 扫描线强度范围的比例
    min_prominence: float = 2.0             # 强度单位, 绝对下限
    speed: float = SLIDE_SPEED
    f_max: float = VALVE_F_MAX
    duration: float = 10.0                  # s
    overrides: Dict[str, float] = field(default_factory=lambda: {'fabric': 300.0, 'cardboard': 300.0})

    def __post_init__(self):
        if self.kernel_px < 1 or self.kernel_px % 2 == 0:
            raise ConfigError(f"roughness.kernel_px must be odd and >= 1, got {self.kernel_px}")
        for name in ('speed', 'f_max', 'duration'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"roughness.{name} must be positive, got {getattr(self, name)}")
        if self.prominence_fraction < 0 or self.min_prominence < 0:
            raise ConfigError("roughness prominence settings must not be negative")
        for name, frequency in self.overrides.items():
            if not 0 < frequency <= self.f_max:
                raise ConfigError(f"override for {name} must lie in (0, {self.f_max}] Hz, got {frequency}")


@dataclass(frozen=True, eq=False)
class ScanSignal:
    positions: np.ndarray
    intensities: np.ndarray
    mm_per_pixel: float
    row: int = 0

    def __post_init__(self):
        if len(self.intensities) < 3 or len(self.positions) != len(self.intensities):
            raise InvalidTraceError("a scanline needs at least 3 pixels")
        if np.any(np.diff(self.positions) != 1):
            raise InvalidTraceError("scanline positions must be contiguous")

    def __len__(self):
        return len(self.intensities)

    @property
    def intensity_range(self) -> float:
        return float(np.max(self.intensities) - np.min(self.intensities))


@dataclass(frozen=True, eq=False)
class RoughnessWave:
    """阀门切换序列: 每个时刻切换到给定状态, 状态严格交替"""
    times: np.ndarray
    states: tuple
    duration: float
    nominal_speed: float = SLIDE_SPEED

    def __post_init__(self):
        times = np.array(self.times, dtype=np.float64).reshape(-1)
        states = tuple(ValveState(s) for s in self.states)
        if len(times) != len(states):
            raise InvalidTraceError(f"{len(times)} transition times but {len(states)} states")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise InvalidTraceError("transition times must be strictly increasing")
        if any(a is b for a, b in zip(states, states[1:])):
            raise InvalidTraceError("valve states must strictly alternate")
        if not self.duration > 0:
            raise InvalidTraceError(f"wave duration must be positive, got {self.duration}")
        times.flags.writeable = False
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'states', states)

    def __len__(self):
        return len(self.times)

    @property
    def initial_state(self) -> ValveState:
        return self.states[0].toggled() if self.states else ValveState.OFF

    @property
    def min_gap(self) -> float:
        return float(np.min(np.diff(self.times))) if len(self.times) > 1 else float('inf')

    def toggle_frequency(self) -> float:
        """Full ON/OFF cycles per second over the wave duration."""
        return len(self.times) / (2.0 * self.duration)

    def state_at(self, t: float) -> ValveState:
        index = int(np.searchsorted(self.times, t, side='right')) - 1
        return self.initial_state if index < 0 else self.states[index]

    def state_array(self, grid: np.ndarray) -> np.ndarray:
        """0/1 valve states on a time grid."""
        codes = np.array([self.initial_state.value] + [s.value for s in self.states], dtype=np.int8)
        return codes[np.searchsorted(self.times, grid, side='right')]

    def sample(self, rate: float = 1000.0) -> pd.DataFrame:
        grid = np.arange(int(np.floor(self.duration * rate + 1e-9))) / rate
        return pd.DataFrame({'time_s': grid, 'state': self.state_array(grid)})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'time_s': self.times, 'state': np.array([s.value for s in self.states], dtype=np.int64)})

    def to_csv(self, path: PathLike) -> str:
        return write_frame_csv(path, self.to_frame())

    def dense_to_csv(self, path: PathLike, rate: float = 1000.0) -> str:
        return write_frame_csv(path, self.sample(rate))

    def to_dict(self) -> dict:
        return {
            'transitions': len(self.times),
            'duration_s': self.duration,
            'nominal_speed_mm_s': self.nominal_speed,
            'initial_state': self.initial_state.name,
            'toggle_frequency_hz': self.toggle_frequency(),
            'min_gap_s': self.min_gap if len(self.times) > 1 else None,
        }

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, duration: float, nominal_speed: float = SLIDE_SPEED) -> RoughnessWave:
        if list(frame.columns) != ['time_s', 'state']:
            raise InvalidTraceError(f"roughness wave columns must be 'time_s,state', got {list(frame.columns)}")
        return cls(frame['time_s'].to_numpy(dtype=np.float64),
                   tuple(ValveState(int(s)) for s in frame['state']), duration, nominal_speed)


def mean_filter(img: SurfaceImage, kernel_px: int) -> SurfaceImage:
    """
    均值滤波, 边缘复制, 输出尺寸不变

    Args:
        img: 灰度图像
        kernel_px: 奇数窗口, 不超过图像宽高
    """
    if kernel_px < 1 or kernel_px % 2 == 0:
        raise InvalidRangeError(f"kernel must be odd and >= 1, got {kernel_px}")
    if kernel_px > min(img.width, img.height):
        raise InvalidRangeError(f"kernel {kernel_px} exceeds image size {img.width}x{img.height}")
    if kernel_px == 1:
        return img
    filtered = ndimage.uniform_filter(img.pixels, size=kernel_px, mode='nearest')
    # 累加误差不得越出输入范围
    filtered = np.clip(filtered, img.pixels.min(), img.pixels.max())
    return SurfaceImage(filtered, img.mm_per_pixel)


def extract_scanline(img: SurfaceImage) -> ScanSignal:
    row = img.height // 2
    return ScanSignal(np.arange(img.width), np.array(img.pixels[row]), img.mm_per_pixel, row)


def cap_frequency(wave: RoughnessWave, f_max: float = VALVE_F_MAX) -> RoughnessWave:
    """
    频率上限

    间隔小于 1/(2·f_max) 的连续切换段替换为该段时间跨度上 f_max 的均匀方波;
    段后状态保持与原序列一致.
    """
    if not f_max > 0:
        raise InvalidRangeError(f"f_max must be positive, got {f_max}")
    times, states = wave.times, wave.states
    half = 1.0 / (2.0 * f_max)
    if len(times) < 2:
        return wave
    tight = np.diff(times) < half * (1.0 - GAP_RTOL)
    if not tight.any():
        return wave
    out_times, out_states = [], []
    i, n = 0, len(times)
    while i < n:
        if i < n - 1 and tight[i]:
            j = i
            while j < n - 1 and tight[j]:
                j += 1
            count = int(np.floor((times[j] - times[i]) / half + 1e-9)) + 1
            generated = [(times[i] + k * half, states[i] if k % 2 == 0 else states[i].toggled())
                         for k in range(count)]
            if generated[-1][1] is not states[j]:
                generated.pop()
            out_times.extend(t for t, _ in generated)
            out_states.extend(s for _, s in generated)
            i = j + 1
        else:
            out_times.append(times[i])
            out_states.append(states[i])
            i += 1
    capped = RoughnessWave(np.array(out_times), tuple(out_states), wave.duration, wave.nominal_speed)
    logger.debug('frequency cap %g Hz: %d -> %d transitions', f_max, n, len(capped))
    return capped


def build_wave(peaks: PeakSet, mm_per_pixel: float, speed: float = SLIDE_SPEED, f_max: float = VALVE_F_MAX,
               apply_cap: bool = True) -> RoughnessWave:
    """
    峰值 -> 阀门方波

    像素 p 对应时刻 p·mm_per_pixel/speed; 极小值开阀, 极大值关阀.
    """
    if not speed > 0:
        raise InvalidRangeError(f"speed must be positive, got {speed}")
    if not f_max > 0:
        raise InvalidRangeError(f"f_max must be positive, got {f_max}")
    if not mm_per_pixel > 0:
        raise InvalidRangeError(f"mm_per_pixel must be positive, got {mm_per_pixel}")
    events = peaks.merged()
    times = np.array([index * mm_per_pixel / speed for index, _ in events], dtype=np.float64)
    states = tuple(ValveState.OFF if is_max else ValveState.ON for _, is_max in events)
    wave = RoughnessWave(times, states, max(peaks.length, 1) * mm_per_pixel / speed, speed)
    return cap_frequency(wave, f_max) if apply_cap else wave


def uniform_square_wave(frequency: float, duration: float, start: float = 0.0,
                        first_state: ValveState = ValveState.ON, nominal_speed: float = SLIDE_SPEED) -> RoughnessWave:
    """Square wave at `frequency` over [start, duration)."""
    if not frequency > 0:
        raise InvalidRangeError(f"frequency must be positive, got {frequency}")
    count = max(0, int(np.ceil((duration - start) * 2.0 * frequency - 1e-9)))
    times = start + np.arange(count) / (2.0 * frequency)
    states = tuple(first_state if k % 2 == 0 else first_state.toggled() for k in range(count))
    return RoughnessWave(times, states, duration, nominal_speed)


def tile_wave(wave: RoughnessWave, duration: float) -> RoughnessWave:
    """Repeat one scanline traversal to fill `duration`; seams keep strict alternation."""
    if wave.duration >= duration:
        return wave
    if not len(wave):
        return RoughnessWave(wave.times, wave.states, duration, wave.nominal_speed)
    copies = int(np.ceil(duration / wave.duration))
    out_times, out_states = [], []
    for k in range(copies):
        for t, s in zip(wave.times + k * wave.duration, wave.states):
            if t >= duration:
                break
            if out_states and out_states[-1] is s:
                continue
            out_times.append(t)
            out_states.append(s)
    return RoughnessWave(np.array(out_times), tuple(out_states), duration, wave.nominal_speed)


def prominence_threshold(scan: ScanSignal, config: RoughnessConfig) -> float:
    return max(config.prominence_fraction * scan.intensity_range, config.min_prominence)


def override_frequency(name: str, config: RoughnessConfig) -> Optional[float]:
    return config.overrides.get(name)


def render_roughness(rec: TextureRecording, config: Optional[RoughnessConfig] = None) -> RoughnessWave:
    """
    粗糙度渲染

    mean_filter -> extract_scanline -> detect_peaks -> build_wave -> cap_frequency,
    扫描线不足配置时长时平铺. 配置了手动频率的细纹理直接输出均匀方波.
    """
    config = config or RoughnessConfig()
    manual = override_frequency(rec.name, config)
    if manual is not None:
        logger.info('%s: manual %g Hz square wave', rec.name, manual)
        return uniform_square_wave(manual, config.duration, nominal_speed=config.speed)
    scan = extract_scanline(mean_filter(rec.image, config.kernel_px))
    separation = min_separation_px(config.speed, config.f_max, scan.mm_per_pixel)
    peaks = detect_peaks(scan, separation, prominence_threshold(scan, config))
    wave = build_wave(peaks, scan.mm_per_pixel, config.speed, config.f_max)
    if wave.duration < config.duration:
        wave = cap_frequency(tile_wave(wave, config.duration), config.f_max)
    logger.debug('%s: %d maxima, %d minima, separation %d px -> %d transitions in %.3g s', rec.name,
                 len(peaks.maxima), len(peaks.minima), separation, len(wave), wave.duration)
    return wave


def write_roughness(wave: RoughnessWave, directory: PathLike, name: str) -> str:
    return wave.to_csv(os.path.join(directory, f'{name}_roughness.csv'))


__all__ = [
    'RoughnessConfig', 'ScanSignal', 'RoughnessWave', 'PeakSet', 'mean_filter', 'extract_scanline',
    'detect_peaks', 'min_separation_px', 'build_wave', 'cap_frequency', 'uniform_square_wave', 'tile_wave',
    'render_roughness', 'write_roughness', 'prominence_threshold',
]

