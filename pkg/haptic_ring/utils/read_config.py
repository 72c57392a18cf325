# coding=utf-8
#
# Copyright 2016 timercrack
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
# under the License.
from __future__ import annotations

import configparser
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Final, List, Mapping, Optional, Tuple

from appdirs import AppDirs

from haptic_ring.errors import ConfigError, HapticRingError
from haptic_ring.plantsim import PlantParams, PneumaticParams, SessionConfig, ThermalPlantParams
from haptic_ring.roughness import RoughnessConfig
from haptic_ring.softness import SoftnessConfig
from haptic_ring.thermal import ThermalConfig
from haptic_ring.utils import PathLike, atomic_write_text

logger: Final[logging.Logger] = logging.getLogger(__name__)

config_example = """# haptic-ring configuration file
[textures]
# 纹理名 = 记录清单路径 (相对本文件)
# rough_metal = fixtures/rough_metal.ini

[output]
dir = out
# 同时输出 1 kHz 阀门状态
dense = false
profile_rate_hz = 100
dense_rate_hz = 1000

[softness]
# 按压斜率范围 N/s, auto 表示由纹理集合计算
slope_range = auto
fallback_slope_range = 0.2, 2.0
# 执行器速度范围 mm/s
speed_range = 2.0, 20.0
target_displacement_mm = 8.0
hold_duration_s = 30.0
lift_drop = 0.05
smoothing_window_s = 0.1

[thermal]
# 皮肤-显示器接触热阻 m²K/W
r_skin_display = 0.0015
skin_cutoff_hz = 10.0
flux_cutoff_hz = 1.0
onset_threshold_w_m2 = 50.0
onset_hold_s = 0.2
min_temp_c = 5.0
max_temp_c = 42.5
rmse_warning_c = 0.5

[roughness]
kernel_px = 5
# 显著度阈值 = max(比例 * 扫描线强度范围, 绝对下限)
prominence_fraction = 0.05
min_prominence = 2.0
speed_mm_s = 50.0
f_max_hz = 300.0
duration_s = 10.0

[roughness.overrides]
# 细纹理直接使用均匀方波 (Hz)
fabric = 300
cardboard = 300

[plant]
supply_kpa = 75.0
fill_tau_s = 0.02
vent_tau_s = 0.025
syringe_gain_kpa_mm = 5.0
valve_f_max_hz = 300.0
hot_tank_c = 42.5
cold_tank_c = 4.0
mix_volume_l = 3.0
pump_max_lps = 0.03
tube_tau_s = 3.0
kp = 0.4
ambient_c = 22.0
ambient_tau_s = 1800.0

[session]
rate_hz = 3000
log_dt_s = 0.01
initial_temp_c = 32.0
slide_countdown_s = 5.0
slide_duration_s = 10.0
prepare_tolerance_c = 0.3
prepare_dwell_s = 0.0
prepare_timeout_s = 120.0
countdown_s = 5.0
tail_s = 1.0
tracking_tolerance_c = 0.5
tracking_skip_s = 2.0

[fixtures]
seed = 42

[LOG]
# Root logger level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
level = INFO
# Console handler log level
console_level = INFO
# 写入 appdirs 日志目录 (true/false)
to_file = false
file_level = DEBUG
# Log message format
format = %(asctime)s %(name)s [%(levelname)s] %(message)s
"""

app_dir: Final[AppDirs] = AppDirs('haptic-ring')


@dataclass
class RunConfig:
    """一次运行的完整配置"""
    path: Optional[str] = None
    textures: Dict[str, str] = field(default_factory=dict)
    output_dir: str = 'out'
    dense: bool = False
    profile_rate: float = 100.0
    dense_rate: float = 1000.0
    softness: SoftnessConfig = field(default_factory=SoftnessConfig)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    roughness: RoughnessConfig = field(default_factory=RoughnessConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    session: SessionConfig = field(default_factory=SessionConfig)
    fixtures_seed: int = 42
    log: Dict[str, str] = field(default_factory=dict)

    def validate_textures(self) -> None:
        if not self.textures:
            raise ConfigError(f"{self.path or 'config'}: [textures] lists no texture manifests")
        for name, manifest in self.textures.items():
            if not os.path.isfile(manifest):
                raise ConfigError(f"texture {name}: manifest not found: {manifest}")

    def select(self, texture: Optional[str] = None) -> List[str]:
        """Texture names to process, sorted; a single name must be configured."""
        if texture is None:
            return sorted(self.textures)
        if texture not in self.textures:
            raise ConfigError(f"texture {texture!r} is not listed in [textures]")
        return [texture]


def _read(parser: configparser.ConfigParser, section: str, key: str, fallback, kind: str = 'float'):
    getter = {'float': parser.getfloat, 'int': parser.getint, 'bool': parser.getboolean}[kind]
    try:
        return getter(section, key, fallback=fallback)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {parser.get(section, key)!r} is not a valid {kind}") from None


def _read_pair(parser: configparser.ConfigParser, section: str, key: str,
               fallback: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
    raw = parser.get(section, key, fallback=None)
    if raw is None:
        return fallback
    if raw.strip().lower() in ('', 'auto', 'none'):
        return None
    parts = [p.strip() for p in raw.split(',')]
    try:
        low, high = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} must be two comma-separated numbers") from None
    return low, high


def _resolve(base_dir: str, path: str) -> str:
    return os.path.normpath(path if os.path.isabs(path) else os.path.join(base_dir, path))


def parse_run_config(parser: configparser.ConfigParser, base_dir: str, path: Optional[str] = None) -> RunConfig:
    """ConfigParser -> RunConfig; 数值越界或无法解析时抛出 ConfigError"""
    d_soft, d_thermal, d_rough = SoftnessConfig(), ThermalConfig(), RoughnessConfig()
    d_pneu, d_plant, d_session = PneumaticParams(), ThermalPlantParams(), SessionConfig()
    try:
        softness = SoftnessConfig(
            slope_range=_read_pair(parser, 'softness', 'slope_range', d_soft.slope_range),
            fallback_slope_range=_read_pair(parser, 'softness', 'fallback_slope_range',
                                            d_soft.fallback_slope_range) or d_soft.fallback_slope_range,
            speed_range=_read_pair(parser, 'softness', 'speed_range', d_soft.speed_range) or d_soft.speed_range,
            target_displacement=_read(parser, 'softness', 'target_displacement_mm', d_soft.target_displacement),
            hold_duration=_read(parser, 'softness', 'hold_duration_s', d_soft.hold_duration),
            lift_drop=_read(parser, 'softness', 'lift_drop', d_soft.lift_drop),
            smoothing_window=_read(parser, 'softness', 'smoothing_window_s', d_soft.smoothing_window),
            output_rate=_read(parser, 'output', 'profile_rate_hz', d_soft.output_rate),
        )
        thermal = ThermalConfig(
            r_skin_display=_read(parser, 'thermal', 'r_skin_display', d_thermal.r_skin_display),
            skin_cutoff_hz=_read(parser, 'thermal', 'skin_cutoff_hz', d_thermal.skin_cutoff_hz),
            flux_cutoff_hz=_read(parser, 'thermal', 'flux_cutoff_hz', d_thermal.flux_cutoff_hz),
            onset_threshold=_read(parser, 'thermal', 'onset_threshold_w_m2', d_thermal.onset_threshold),
            onset_hold=_read(parser, 'thermal', 'onset_hold_s', d_thermal.onset_hold),
            temp_bounds=(_read(parser, 'thermal', 'min_temp_c', d_thermal.temp_bounds[0]),
                         _read(parser, 'thermal', 'max_temp_c', d_thermal.temp_bounds[1])),
            rmse_warning=_read(parser, 'thermal', 'rmse_warning_c', d_thermal.rmse_warning),
        )
        overrides = dict(d_rough.overrides)
        if parser.has_section('roughness.overrides'):
            overrides = {name: _read(parser, 'roughness.overrides', name, None)
                         for name in parser.options('roughness.overrides')}
        roughness = RoughnessConfig(
            kernel_px=_read(parser, 'roughness', 'kernel_px', d_rough.kernel_px, 'int'),
            prominence_fraction=_read(parser, 'roughness', 'prominence_fraction', d_rough.prominence_fraction),
            min_prominence=_read(parser, 'roughness', 'min_prominence', d_rough.min_prominence),
            speed=_read(parser, 'roughness', 'speed_mm_s', d_rough.speed),
            f_max=_read(parser, 'roughness', 'f_max_hz', d_rough.f_max),
            duration=_read(parser, 'roughness', 'duration_s', d_rough.duration),
            overrides=overrides,
        )
        plant = PlantParams(
            pneumatic=PneumaticParams(
                supply_kpa=_read(parser, 'plant', 'supply_kpa', d_pneu.supply_kpa),
                fill_tau=_read(parser, 'plant', 'fill_tau_s', d_pneu.fill_tau),
                vent_tau=_read(parser, 'plant', 'vent_tau_s', d_pneu.vent_tau),
                syringe_gain=_read(parser, 'plant', 'syringe_gain_kpa_mm', d_pneu.syringe_gain),
                valve_f_max=_read(parser, 'plant', 'valve_f_max_hz', d_pneu.valve_f_max),
            ),
            thermal=ThermalPlantParams(
                hot_tank_c=_read(parser, 'plant', 'hot_tank_c', d_plant.hot_tank_c),
                cold_tank_c=_read(parser, 'plant', 'cold_tank_c', d_plant.cold_tank_c),
                mix_volume_l=_read(parser, 'plant', 'mix_volume_l', d_plant.mix_volume_l),
                pump_max_lps=_read(parser, 'plant', 'pump_max_lps', d_plant.pump_max_lps),
                tube_tau=_read(parser, 'plant', 'tube_tau_s', d_plant.tube_tau),
                kp=_read(parser, 'plant', 'kp', d_plant.kp),
                ambient_c=_read(parser, 'plant', 'ambient_c', d_plant.ambient_c),
                ambient_tau=_read(parser, 'plant', 'ambient_tau_s', d_plant.ambient_tau),
            ),
        )
        session = SessionConfig(
            rate_hz=_read(parser, 'session', 'rate_hz', d_session.rate_hz),
            log_dt=_read(parser, 'session', 'log_dt_s', d_session.log_dt),
            initial_temp_c=_read(parser, 'session', 'initial_temp_c', d_session.initial_temp_c),
            slide_countdown=_read(parser, 'session', 'slide_countdown_s', d_session.slide_countdown),
            slide_duration=_read(parser, 'session', 'slide_duration_s', d_session.slide_duration),
            prepare_tolerance=_read(parser, 'session', 'prepare_tolerance_c', d_session.prepare_tolerance),
            prepare_dwell=_read(parser, 'session', 'prepare_dwell_s', d_session.prepare_dwell),
            prepare_timeout=_read(parser, 'session', 'prepare_timeout_s', d_session.prepare_timeout),
            countdown=_read(parser, 'session', 'countdown_s', d_session.countdown),
            tail=_read(parser, 'session', 'tail_s', d_session.tail),
            tracking_tolerance=_read(parser, 'session', 'tracking_tolerance_c', d_session.tracking_tolerance),
            tracking_skip=_read(parser, 'session', 'tracking_skip_s', d_session.tracking_skip),
        )
    except ConfigError:
        raise
    except HapticRingError as e:
        raise ConfigError(e.message) from None

    sealed_kpa = softness.target_displacement * plant.pneumatic.syringe_gain
    if sealed_kpa > plant.pneumatic.supply_kpa:
        raise ConfigError(
            f"[softness] target_displacement_mm x [plant] syringe_gain_kpa_mm = {sealed_kpa:g} kPa exceeds "
            f"the {plant.pneumatic.supply_kpa:g} kPa supply; the sealed chamber would saturate")

    textures = {}
    if parser.has_section('textures'):
        textures = {name: _resolve(base_dir, parser.get('textures', name)) for name in parser.options('textures')}
    return RunConfig(
        path=path,
        textures=textures,
        output_dir=_resolve(base_dir, parser.get('output', 'dir', fallback='out')),
        dense=_read(parser, 'output', 'dense', False, 'bool'),
        profile_rate=softness.output_rate,
        dense_rate=_read(parser, 'output', 'dense_rate_hz', 1000.0),
        softness=softness,
        thermal=thermal,
        roughness=roughness,
        plant=plant,
        session=session,
        fixtures_seed=_read(parser, 'fixtures', 'seed', 42, 'int'),
        log=dict(parser.items('LOG')) if parser.has_section('LOG') else {},
    )


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def default_run_config(base_dir: str = '.') -> RunConfig:
    """RunConfig built from `config_example` (no textures)."""
    parser = _parser()
    parser.read_string(config_example)
    return parse_run_config(parser, os.path.abspath(base_dir))


def load_run_config(path: PathLike) -> RunConfig:
    """
    读取 INI 配置文件

    Args:
        path: 配置文件路径, 相对路径以该文件所在目录为基准

    Returns:
        RunConfig
    """
    path = os.path.abspath(os.fspath(path))
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = _parser()
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    logger.debug('used config file: %s', path)
    return parse_run_config(parser, os.path.dirname(path), path)


def write_example_config(path: PathLike, textures: Optional[Mapping[str, str]] = None, seed: int = 42) -> str:
    """写出带注释的示例配置, 并填入 [textures] 与 [fixtures] seed"""
    lines = ''.join(f'{name} = {manifest}\n' for name, manifest in sorted((textures or {}).items()))
    text = config_example.replace('[textures]\n', f'[textures]\n{lines}', 1)
    text = text.replace('[fixtures]\nseed = 42\n', f'[fixtures]\nseed = {seed}\n', 1)
    return atomic_write_text(path, text)
