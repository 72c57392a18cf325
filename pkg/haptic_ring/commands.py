# coding=utf-8
"""
指令集 - Command sets

一个纹理的三路执行指令 (位移曲线 / 热觉多项式 / 阀门方波) 的生成, 落盘与回读.

落盘文件:
- <name>_pressure.csv      time_s,displacement_mm,speed_mm_s
- <name>_thermal.csv       time_s,temp_c,fit_temp_c
- <name>_roughness.csv     time_s,state (切换时刻)
- <name>_roughness_dense.csv  1 kHz 阀门状态 (可选)
- <name>_commands.json     曲线分段, 多项式系数, 方波元数据
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from haptic_ring.const import Unit
from haptic_ring.errors import InvalidTraceError, MissingFileError
from haptic_ring.roughness import RoughnessConfig, RoughnessWave, render_roughness, write_roughness
from haptic_ring.softness import PressureProfile, SlopePair, SoftnessConfig, render_softness, write_profile
from haptic_ring.texdata import TextureRecording, TimeSeries
from haptic_ring.thermal import ThermalCommand, ThermalConfig, render_thermal, write_thermal
from haptic_ring.utils import PathLike, read_json, write_json

logger = logging.getLogger('CommandSet')


@dataclass(frozen=True, eq=False)
class CommandSet:
    name: str
    profile: PressureProfile
    thermal: ThermalCommand
    wave: RoughnessWave
    slopes: Optional[SlopePair] = None

    def to_dict(self) -> dict:
        payload = {
            'name': self.name,
            'pressure': self.profile.to_dict(),
            'thermal': self.thermal.to_dict(),
            'roughness': self.wave.to_dict(),
        }
        if self.slopes is not None:
            payload['pressure']['press_slope_n_s'] = self.slopes.press_slope
            payload['pressure']['lift_slope_n_s'] = self.slopes.lift_slope
        return payload

    def summary_row(self) -> dict:
        return {
            'texture': self.name,
            'press_slope_n_s': self.slopes.press_slope if self.slopes else np.nan,
            'lift_slope_n_s': self.slopes.lift_slope if self.slopes else np.nan,
            'rise_speed_mm_s': self.profile.rise.speed,
            'fall_speed_mm_s': -self.profile.fall.speed,
            'profile_duration_s': self.profile.total_duration,
            'initial_temp_c': self.thermal.initial_temp,
            'final_temp_c': self.thermal.evaluate(self.thermal.duration),
            'fit_rmse_c': self.thermal.fit_rmse,
            'clamp_count': self.thermal.clamp_count,
            'transitions': len(self.wave),
            'toggle_frequency_hz': self.wave.toggle_frequency(),
        }


def command_file_names(name: str, dense: bool = False) -> Dict[str, str]:
    names = {
        'pressure': f'{name}_pressure.csv',
        'thermal': f'{name}_thermal.csv',
        'roughness': f'{name}_roughness.csv',
        'commands': f'{name}_commands.json',
    }
    if dense:
        names['roughness_dense'] = f'{name}_roughness_dense.csv'
    return names


def render_commands(rec: TextureRecording, softness: SoftnessConfig, thermal: ThermalConfig,
                    roughness: RoughnessConfig, slope_range: Optional[Tuple[float, float]] = None) -> CommandSet:
    """一条纹理记录 -> 三路指令"""
    result = render_softness(rec, softness, slope_range)
    return CommandSet(rec.name, result.profile, render_thermal(rec, config=thermal),
                      render_roughness(rec, roughness), result.slopes)


def write_command_set(commands: CommandSet, directory: PathLike, profile_rate: float = 100.0,
                      dense: bool = False, dense_rate: float = 1000.0) -> List[str]:
    """写出一个纹理的全部指令文件, 返回文件路径 (每个文件原子写入)"""
    directory = os.fspath(directory)
    name = commands.name
    paths = [
        write_profile(commands.profile, directory, name, profile_rate),
        write_thermal(commands.thermal, directory, name),
        write_roughness(commands.wave, directory, name),
    ]
    if dense:
        paths.append(commands.wave.dense_to_csv(
            os.path.join(directory, command_file_names(name, True)['roughness_dense']), dense_rate))
    paths.append(write_json(os.path.join(directory, command_file_names(name)['commands']), commands.to_dict()))
    return paths


def _read_csv(path: str, columns: List[str]) -> pd.DataFrame:
    if not os.path.isfile(path):
        raise MissingFileError(f"command file not found: {path}")
    frame = pd.read_csv(path, float_precision='round_trip')
    if list(frame.columns) != columns:
        raise InvalidTraceError(f"{path}: expected columns {','.join(columns)}, got {','.join(frame.columns)}")
    return frame


def load_command_set(directory: PathLike, name: str) -> CommandSet:
    """
    从 render 输出目录回读指令集

    位移曲线与多项式取自 <name>_commands.json, 显示温度轨迹与切换序列取自 CSV.
    """
    directory = os.fspath(directory)
    names = command_file_names(name)
    sidecar = os.path.join(directory, names['commands'])
    if not os.path.isfile(sidecar):
        raise MissingFileError(f"command sidecar not found: {sidecar}")
    payload = read_json(sidecar)
    try:
        profile = PressureProfile.from_dict(payload['pressure'])
        thermal_meta, wave_meta = payload['thermal'], payload['roughness']
        slopes = None
        if 'press_slope_n_s' in payload['pressure']:
            slopes = SlopePair(float(payload['pressure']['press_slope_n_s']),
                               float(payload['pressure']['lift_slope_n_s']))
        thermal_frame = _read_csv(os.path.join(directory, names['thermal']), ['time_s', 'temp_c', 'fit_temp_c'])
        display = TimeSeries(thermal_frame['time_s'].to_numpy(), thermal_frame['temp_c'].to_numpy(), Unit.CELSIUS)
        thermal = ThermalCommand(
            display_temp=display,
            poly_coeffs=np.array(thermal_meta['coefficients'], dtype=np.float64),
            fit_rmse=float(thermal_meta['fit_rmse_c']),
            t_start=float(thermal_meta['tau']['t_start_s']),
            t_end=float(thermal_meta['tau']['t_end_s']),
            clamp_count=int(thermal_meta['clamp_count']),
            warnings=tuple(thermal_meta.get('warnings', ())),
        )
        wave_frame = _read_csv(os.path.join(directory, names['roughness']), ['time_s', 'state'])
        wave = RoughnessWave.from_frame(wave_frame, float(wave_meta['duration_s']),
                                        float(wave_meta['nominal_speed_mm_s']))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidTraceError(f"{sidecar}: malformed command sidecar ({e!r})") from e
    logger.debug('loaded command set %s from %s', name, directory)
    return CommandSet(name, profile, thermal, wave, slopes)


def summary_frame(command_sets: List[CommandSet]) -> pd.DataFrame:
    return pd.DataFrame([c.summary_row() for c in command_sets])
