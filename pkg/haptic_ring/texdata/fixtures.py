# coding=utf-8
"""
合成纹理数据 - Synthetic texture fixtures

按六种原型生成与数据库记录形状一致的合成记录:
- 按压力: 以原型斜率匀速加载到 3 N, 保持 30 s (轻微衰减), 再卸载
- 皮肤温度 / 热流: 接触后指数冷却, 金属远大于泡沫
- 表面图像: 条纹光栅或平滑噪声场
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
from scipy import ndimage

from haptic_ring.const import Archetype, Unit
from haptic_ring.errors import UnknownArchetypeError
from haptic_ring.texdata import SurfaceImage, TextureRecording, TimeSeries, save_recording
from haptic_ring.utils import PathLike, ensure_dir

logger = logging.getLogger('TextureFixtures')

FORCE_RATE = 100.0          # Hz
THERMAL_RATE = 100.0        # Hz
STOP_FORCE = 3.0            # N, 数据库停止条件
PRESS_START = 0.5           # s
HOLD_SECONDS = 30.0
HOLD_DECAY = 0.03           # 保持阶段力的相对衰减
TAIL_SECONDS = 1.0
THERMAL_SECONDS = 35.0
CONTACT_TIME = 2.0          # s
CONTACT_RISE = 0.15         # s, 热流建立时间常数
SKIN_TEMP = 32.0
SKIN_NOISE = 0.02
SENSOR_RESISTANCE = 0.0015  # m²K/W, 皮肤传感器到接触面
FLUX_NOISE = 5.0
IMAGE_WIDTH = 400
IMAGE_HEIGHT = 64
MM_PER_PIXEL = 0.05


@dataclass(frozen=True)
class FixtureParams:
    """原型参数"""
    press_slope: float          # N/s
    lift_ratio: float           # |lift slope| / press slope
    flux_initial: float         # W/m²
    flux_final: float           # W/m²
    cooling_tau: float          # s
    conductivity: float         # W/(m·K)


ARCHETYPE_PARAMS: Dict[Archetype, FixtureParams] = {
    Archetype.SMOOTH_METAL: FixtureParams(2.0, 1.3, 800.0, 250.0, 8.0, 50.0),
    Archetype.ROUGH_METAL: FixtureParams(1.6, 1.3, 700.0, 220.0, 8.0, 50.0),
    Archetype.CARDBOARD: FixtureParams(1.2, 1.3, 300.0, 110.0, 9.0, 0.07),
    Archetype.FABRIC: FixtureParams(0.9, 1.3, 250.0, 90.0, 9.0, 0.06),
    Archetype.SMOOTH_FOAM: FixtureParams(0.6, 1.3, 100.0, 30.0, 10.0, 0.04),
    Archetype.ROUGH_FOAM: FixtureParams(0.2, 1.3, 80.0, 20.0, 10.0, 0.04),
}


def _force_trace(params: FixtureParams) -> TimeSeries:
    fs = FORCE_RATE
    n_ramp = int(round(STOP_FORCE / params.press_slope * fs))
    n_hold = int(round(HOLD_SECONDS * fs))
    ramp = STOP_FORCE * np.arange(n_ramp + 1) / n_ramp
    hold = STOP_FORCE * (1.0 - HOLD_DECAY * np.arange(1, n_hold + 1) / n_hold)
    n_lift = int(round(hold[-1] / (params.lift_ratio * params.press_slope) * fs))
    lift = hold[-1] * (1.0 - np.arange(1, n_lift + 1) / n_lift)
    force = np.concatenate([
        np.zeros(int(round(PRESS_START * fs))), ramp, hold, lift, np.zeros(int(round(TAIL_SECONDS * fs))),
    ])
    return TimeSeries(np.arange(len(force)) / fs, force, Unit.NEWTON)


def _thermal_traces(params: FixtureParams, rng: np.random.Generator):
    fs = THERMAL_RATE
    t = np.arange(int(round(THERMAL_SECONDS * fs))) / fs
    since = np.clip(t - CONTACT_TIME, 0.0, None)
    decay = np.exp(-since / params.cooling_tau)
    # 半无限体接触: 接触面温度恒定, 皮肤随热流衰减同步降温
    skin_drop = SENSOR_RESISTANCE * (params.flux_initial - params.flux_final)
    skin = SKIN_TEMP - skin_drop * (1.0 - decay)
    flux = (params.flux_final + (params.flux_initial - params.flux_final) * decay) \
        * (1.0 - np.exp(-since / CONTACT_RISE))
    skin = skin + rng.normal(0.0, SKIN_NOISE, len(t))
    flux = flux + rng.normal(0.0, FLUX_NOISE, len(t))
    return TimeSeries(t, skin, Unit.CELSIUS), TimeSeries(t, flux, Unit.WATT_PER_M2)


def _smooth_field(rng: np.random.Generator, sigma: float) -> np.ndarray:
    field = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (IMAGE_HEIGHT, IMAGE_WIDTH)), sigma, mode='wrap')
    return field / np.max(np.abs(field))


def _surface_image(kind: Archetype, rng: np.random.Generator) -> SurfaceImage:
    x = np.arange(IMAGE_WIDTH)[np.newaxis, :]
    y = np.arange(IMAGE_HEIGHT)[:, np.newaxis]
    shape = (IMAGE_HEIGHT, IMAGE_WIDTH)
    if kind is Archetype.ROUGH_METAL:
        # 2 mm 周期竖条纹
        pixels = 120.0 + 90.0 * np.sin(2 * np.pi * x / 40.0) + rng.normal(0.0, 3.0, shape)
    elif kind is Archetype.SMOOTH_METAL:
        pixels = 190.0 + rng.normal(0.0, 0.6, shape)
    elif kind is Archetype.ROUGH_FOAM:
        pixels = 128.0 + 80.0 * _smooth_field(rng, 6.0)
    elif kind is Archetype.SMOOTH_FOAM:
        pixels = 150.0 + 25.0 * _smooth_field(rng, 20.0)
    elif kind is Archetype.CARDBOARD:
        pixels = 140.0 + 20.0 * np.sin(2 * np.pi * x / 5.0) + rng.normal(0.0, 2.0, shape)
    else:
        # 编织纹理
        pixels = 110.0 + 30.0 * np.sin(2 * np.pi * x / 4.0 + np.pi / 4) * np.cos(2 * np.pi * y / 8.0) \
            + rng.normal(0.0, 2.0, shape)
    return SurfaceImage(np.clip(np.rint(pixels), 0, 255), MM_PER_PIXEL)


def _as_archetype(kind: Union[str, Archetype]) -> Archetype:
    if isinstance(kind, Archetype):
        return kind
    try:
        return Archetype(kind)
    except ValueError:
        raise UnknownArchetypeError(
            f"unknown texture archetype '{kind}', expected one of {[a.value for a in Archetype]}") from None


def generate_fixture(kind: Union[str, Archetype], seed: int) -> TextureRecording:
    """
    生成合成纹理记录

    Args:
        kind: 原型名称
        seed: 随机种子, 相同 (kind, seed) 产生相同数据

    Returns:
        TextureRecording: 满足全部数据不变量的记录
    """
    kind = _as_archetype(kind)
    params = ARCHETYPE_PARAMS[kind]
    rng = np.random.default_rng(seed)
    skin, flux = _thermal_traces(params, rng)
    return TextureRecording(
        name=kind.value,
        press_force=_force_trace(params),
        skin_temp=skin,
        heat_flux=flux,
        image=_surface_image(kind, rng),
        thermal_conductivity_hint=params.conductivity,
    )


def write_fixture_set(directory: PathLike, seed: int) -> Dict[str, str]:
    """Generate all six archetypes into `directory`; returns name -> manifest path."""
    directory = ensure_dir(directory)
    manifests = {}
    for kind in Archetype:
        manifests[kind.value] = save_recording(generate_fixture(kind, seed), directory)
        logger.info('fixture %s written to %s', kind.value, os.path.basename(manifests[kind.value]))
    return manifests
