# coding=utf-8
"""
热觉渲染模块 - Thermal Rendering Module

基于半无限体模型由皮肤温度与热流计算显示温度:
- contact_resistance: 皮肤-物体接触热阻
- lowpass: 零相位低通 (皮肤温度 10 Hz, 热流 1 Hz)
- display_temperature: T_display = T_skin - q''·R_skin-display
- fit_poly7: 归一化时间上的七阶多项式拟合
- render_thermal: 滤波 -> 截去接触前数据 -> 显示温度 -> 多项式
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import Legendre, Polynomial

from haptic_ring.errors import (
    ConfigError, DegenerateIntervalError, InvalidRangeError, MisalignedSeriesError, PolyFitError,
)
from haptic_ring.texdata import TextureRecording, TimeSeries, detect_contact_onset
from haptic_ring.thermal.filters import lowpass
from haptic_ring.utils import PathLike, write_frame_csv

logger = logging.getLogger('ThermalRenderer')

POLY_ORDER = 7
R_SKIN_DISPLAY = 0.0015                 # m²K/W, 硅胶管
DISPLAY_BOUNDS = (5.0, 42.5)            # °C, 冷 / 热水箱限制


@dataclass
class ThermalConfig:
    """热觉渲染配置"""
    r_skin_display: float = R_SKIN_DISPLAY
    skin_cutoff_hz: float = 10.0
    flux_cutoff_hz: float = 1.0
    onset_threshold: float = 50.0       # W/m²
    onset_hold: float = 0.2             # s
    temp_bounds: Tuple[float, float] = DISPLAY_BOUNDS
    rmse_warning: float = 0.5           # °C

    def __post_init__(self):
        for name in ('r_skin_display', 'skin_cutoff_hz', 'flux_cutoff_hz', 'rmse_warning'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"thermal.{name} must be positive, got {getattr(self, name)}")
        for name in ('onset_threshold', 'onset_hold'):
            if getattr(self, name) < 0:
                raise ConfigError(f"thermal.{name} must not be negative, got {getattr(self, name)}")
        if not self.temp_bounds[0] < self.temp_bounds[1]:
            raise ConfigError(f"thermal.temp_bounds must be increasing, got {self.temp_bounds}")


def contact_resistance(k_object: float) -> float:
    """
    接触热阻 R = (0.37 + k)/(1870·k), 适用于约 2 N 的接触力

    Args:
        k_object: 物体导热系数 W/(m·K)

    Returns:
        float: m²K/W
    """
    if not k_object > 0:
        raise InvalidRangeError(f"thermal conductivity must be positive, got {k_object}")
    return (0.37 + k_object) / (1870.0 * k_object)


def heat_flux_from_temperatures(t_skin, t_object, r_skin_object: float):
    """q'' = (T_skin - T_object)/R_skin-object."""
    return (np.asarray(t_skin) - np.asarray(t_object)) / r_skin_object


def object_surface_temperature(t_skin, flux, r_skin_object: float):
    """T_object = T_skin - q''·R_skin-object."""
    return np.asarray(t_skin) - np.asarray(flux) * r_skin_object


def display_temperature_from_object(t_skin, t_object, r_skin_display: float, r_skin_object: float):
    """T_display = T_skin·(1 - R_d/R_o) + (R_d/R_o)·T_object."""
    ratio = r_skin_display / r_skin_object
    return np.asarray(t_skin) * (1.0 - ratio) + ratio * np.asarray(t_object)


@dataclass(frozen=True, eq=False)
class ThermalInputs:
    """滤波并截断后的热学输入, 两条序列共用时间轴"""
    skin_temp: TimeSeries
    heat_flux: TimeSeries
    onset: float
    r_skin_display: float = R_SKIN_DISPLAY

    def __post_init__(self):
        if not self.skin_temp.same_grid(self.heat_flux):
            raise MisalignedSeriesError("skin temperature and heat flux are on different time bases")
        if not self.r_skin_display > 0:
            raise InvalidRangeError(f"R_skin_display must be positive, got {self.r_skin_display}")
        if self.skin_temp.start < self.onset - 1e-9 * self.skin_temp.dt:
            raise MisalignedSeriesError(f"traces start at {self.skin_temp.start} s, before onset {self.onset} s")


def display_temperature_unclamped(inputs: ThermalInputs) -> TimeSeries:
    return inputs.skin_temp.with_values(inputs.skin_temp.values - inputs.heat_flux.values * inputs.r_skin_display)


def clamp_temperature(series: TimeSeries, bounds: Sequence[float] = DISPLAY_BOUNDS) -> Tuple[TimeSeries, int]:
    low, high = bounds
    count = int(np.count_nonzero((series.values < low) | (series.values > high)))
    if not count:
        return series, 0
    return series.with_values(np.clip(series.values, low, high)), count


def display_temperature(inputs: ThermalInputs, bounds: Sequence[float] = DISPLAY_BOUNDS) -> TimeSeries:
    """显示温度, 截断到安全范围并记录截断次数"""
    clamped, count = clamp_temperature(display_temperature_unclamped(inputs), bounds)
    if count:
        logger.warning('display temperature clamped to [%g, %g] °C at %d of %d samples',
                       bounds[0], bounds[1], count, len(clamped))
    return clamped


def normalized_time(timestamps: np.ndarray, t_start: float, t_end: float) -> np.ndarray:
    return (np.asarray(timestamps, dtype=np.float64) - t_start) / (t_end - t_start)


def fit_poly7(series: TimeSeries) -> Tuple[np.ndarray, float]:
    """
    七阶多项式最小二乘拟合

    时间先归一化到 τ ∈ [0, 1]; 在 Legendre 基上求解后换算为 τ 的幂次系数.

    Returns:
        (coeffs, rmse): 升幂排列的 8 个系数, 拟合均方根误差 (°C)
    """
    n_coeffs = POLY_ORDER + 1
    if len(series) < n_coeffs + 1:
        raise PolyFitError(f"a degree-{POLY_ORDER} fit needs at least {n_coeffs + 1} samples, got {len(series)}")
    tau = normalized_time(series.timestamps, series.start, series.end)
    if len(np.unique(tau)) < n_coeffs:
        raise PolyFitError(f"fewer than {n_coeffs} distinct sample times")
    x = 2.0 * tau - 1.0
    vander = np.polynomial.legendre.legvander(x, POLY_ORDER)
    leg_coeffs, _, rank, _ = np.linalg.lstsq(vander, series.values, rcond=None)
    if rank < n_coeffs:
        raise PolyFitError(f"rank-deficient fit (rank {rank} < {n_coeffs})")
    power = Legendre(leg_coeffs, domain=[0.0, 1.0]).convert(kind=Polynomial).coef
    coeffs = np.zeros(n_coeffs)
    coeffs[:len(power)] = power
    residual = np.polynomial.polynomial.polyval(tau, coeffs) - series.values
    return coeffs, float(np.sqrt(np.mean(residual ** 2)))


@dataclass(frozen=True, eq=False)
class ThermalCommand:
    """显示温度轨迹与下发给控制器的多项式"""
    display_temp: TimeSeries
    poly_coeffs: np.ndarray
    fit_rmse: float
    t_start: float
    t_end: float
    clamp_count: int = 0
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        coeffs = np.array(self.poly_coeffs, dtype=np.float64)
        if coeffs.shape != (POLY_ORDER + 1,):
            raise PolyFitError(f"expected {POLY_ORDER + 1} coefficients, got {coeffs.shape}")
        if not self.t_end > self.t_start:
            raise DegenerateIntervalError(f"empty command interval [{self.t_start}, {self.t_end}]")
        coeffs.flags.writeable = False
        object.__setattr__(self, 'poly_coeffs', coeffs)
        object.__setattr__(self, 'warnings', tuple(self.warnings))

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def evaluate(self, t_rel):
        """Commanded temperature t_rel seconds after contact; held at the end value afterwards."""
        tau = np.clip(np.asarray(t_rel, dtype=np.float64) / self.duration, 0.0, 1.0)
        value = np.polynomial.polynomial.polyval(tau, self.poly_coeffs)
        return float(value) if np.ndim(value) == 0 else value

    @property
    def initial_temp(self) -> float:
        return self.evaluate(0.0)

    def to_frame(self) -> pd.DataFrame:
        t = self.display_temp.timestamps
        return pd.DataFrame({
            'time_s': t,
            'temp_c': self.display_temp.values,
            'fit_temp_c': np.polynomial.polynomial.polyval(normalized_time(t, self.t_start, self.t_end),
                                                           self.poly_coeffs),
        })

    def to_csv(self, path: PathLike) -> str:
        return write_frame_csv(path, self.to_frame())

    def to_dict(self) -> dict:
        return {
            'coefficients': [float(c) for c in self.poly_coeffs],
            'order': POLY_ORDER,
            'tau': {'t_start_s': self.t_start, 't_end_s': self.t_end},
            'fit_rmse_c': self.fit_rmse,
            'clamp_count': self.clamp_count,
            'initial_temp_c': self.initial_temp,
            'warnings': list(self.warnings),
        }


def prepare_thermal_inputs(rec: TextureRecording, config: Optional[ThermalConfig] = None,
                           r_skin_display: Optional[float] = None) -> ThermalInputs:
    """
    滤波并截去接触前数据

    起点在原始热流上检测; 零相位滤波会把接触阶跃向前展宽, 不能用滤波后的热流判定.
    """
    config = config or ThermalConfig()
    r_skin_display = config.r_skin_display if r_skin_display is None else r_skin_display
    skin = lowpass(rec.skin_temp, config.skin_cutoff_hz)
    flux = lowpass(rec.heat_flux, config.flux_cutoff_hz)
    onset = detect_contact_onset(rec.heat_flux, config.onset_threshold, config.onset_hold)
    if not skin.same_grid(flux):
        # 热流插值到皮肤温度时间轴的重叠区间
        lo, hi = max(skin.start, flux.start), min(skin.end, flux.end)
        mask = (skin.timestamps >= lo) & (skin.timestamps <= hi)
        if np.count_nonzero(mask) < 2:
            raise MisalignedSeriesError(f"{rec.name}: skin temperature and heat flux do not overlap in time")
        grid = skin.timestamps[mask]
        skin = TimeSeries(grid, skin.values[mask], skin.unit)
        flux = TimeSeries(grid, np.interp(grid, flux.timestamps, flux.values), flux.unit)
        logger.info('%s: heat flux resampled onto the skin temperature grid', rec.name)
    remaining = np.count_nonzero(skin.timestamps >= onset - 1e-9 * skin.dt)
    if remaining < POLY_ORDER + 2:
        raise DegenerateIntervalError(
            f"{rec.name}: only {remaining} samples after contact at {onset:.3f} s")
    return ThermalInputs(skin.trimmed(onset), flux.trimmed(onset), onset, r_skin_display)


def render_thermal(rec: TextureRecording, r_skin_display: Optional[float] = None,
                   config: Optional[ThermalConfig] = None) -> ThermalCommand:
    """
    热觉渲染: lowpass -> 接触起点截断 -> 显示温度 -> 七阶拟合

    Args:
        rec: 纹理记录
        r_skin_display: 皮肤-显示器接触热阻, 默认取配置值
        config: 热觉配置

    Returns:
        ThermalCommand
    """
    config = config or ThermalConfig()
    inputs = prepare_thermal_inputs(rec, config, r_skin_display)
    display, clamp_count = clamp_temperature(display_temperature_unclamped(inputs), config.temp_bounds)
    warnings = []
    if clamp_count:
        warnings.append(f"display temperature clamped at {clamp_count} samples")
    coeffs, rmse = fit_poly7(display)
    if rmse > config.rmse_warning:
        warnings.append(f"polynomial fit rmse {rmse:.3f} °C exceeds {config.rmse_warning} °C")
    for message in warnings:
        logger.warning('%s: %s', rec.name, message)
    logger.debug('%s: contact at %.3f s, display %.2f -> %.2f °C, rmse %.4f °C', rec.name,
                 inputs.onset, display.values[0], display.values[-1], rmse)
    return ThermalCommand(display, coeffs, rmse, display.start, display.end, clamp_count, tuple(warnings))


def write_thermal(command: ThermalCommand, directory: PathLike, name: str) -> str:
    return command.to_csv(os.path.join(directory, f'{name}_thermal.csv'))
