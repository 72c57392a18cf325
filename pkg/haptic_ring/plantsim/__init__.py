# coding=utf-8
"""
装置仿真模块 - Plant Simulation Module

指环执行硬件的集总参数定步长仿真:
- 气动回路: 75 kPa 气源, 300 Hz 快速阀, 2/2 隔离阀, 线性执行器 + 注射器
- 液压热回路: 热水箱 42.5 °C, 冷水箱 < 5 °C, 混合水箱, 比例控制水泵, 管壁热敏电阻

所有一阶环节按零阶保持精确离散化: x += (x_eq - x)·(1 - e^(-dt/τ)).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

from haptic_ring.const import IsolationState, ValveState
from haptic_ring.errors import ConfigError, StepSizeError

logger = logging.getLogger('PlantSimulator')


@dataclass(frozen=True)
class PneumaticParams:
    """气动回路参数"""
    supply_kpa: float = 75.0
    fill_tau: float = 0.02              # s
    vent_tau: float = 0.025             # s
    syringe_gain: float = 5.0           # kPa / mm
    valve_f_max: float = 300.0          # Hz

    def __post_init__(self):
        for name in ('supply_kpa', 'fill_tau', 'vent_tau', 'syringe_gain', 'valve_f_max'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"plant.{name} must be positive, got {getattr(self, name)}")

    @property
    def max_dt(self) -> float:
        return 1.0 / (10.0 * self.valve_f_max)


@dataclass(frozen=True)
class ThermalPlantParams:
    """液压热回路参数"""
    hot_tank_c: float = 42.5
    cold_tank_c: float = 4.0
    mix_volume_l: float = 3.0
    pump_max_lps: float = 0.03          # L/s
    tube_tau: float = 3.0               # s
    kp: float = 0.4                     # 占空比 / °C
    ambient_c: float = 22.0
    ambient_tau: float = 1800.0         # s, 混合水箱向环境的散热

    def __post_init__(self):
        if not self.hot_tank_c > self.cold_tank_c:
            raise ConfigError(f"hot tank ({self.hot_tank_c} °C) must be warmer than cold tank ({self.cold_tank_c} °C)")
        for name in ('mix_volume_l', 'pump_max_lps', 'tube_tau', 'kp', 'ambient_tau'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"plant.{name} must be positive, got {getattr(self, name)}")

    @property
    def max_dt(self) -> float:
        return self.tube_tau / 10.0


@dataclass(frozen=True)
class PlantParams:
    pneumatic: PneumaticParams = field(default_factory=PneumaticParams)
    thermal: ThermalPlantParams = field(default_factory=ThermalPlantParams)


@dataclass(frozen=True)
class PlantState:
    """装置状态快照"""
    chamber_kpa: float = 0.0
    mix_temp_c: float = 32.0
    tube_temp_c: float = 32.0
    isolation_valve: IsolationState = IsolationState.OPEN
    fast_valve: ValveState = ValveState.OFF
    syringe_pos_mm: float = 0.0
    t: float = 0.0


def _lag(tau: float, dt: float) -> float:
    return 1.0 - math.exp(-dt / tau)


def check_pneumatic_step(params: PneumaticParams, dt: float) -> None:
    if not 0 < dt <= params.max_dt * (1 + 1e-9):
        raise StepSizeError(f"pneumatic step {dt} s exceeds 1/(10·{params.valve_f_max} Hz) = {params.max_dt:.3g} s")


def check_thermal_step(params: ThermalPlantParams, dt: float) -> None:
    if not 0 < dt <= params.max_dt * (1 + 1e-9):
        raise StepSizeError(f"thermal step {dt} s exceeds tube_tau/10 = {params.max_dt:.3g} s")


def pneumatic_update(chamber: float, params: PneumaticParams, fast_valve_on: bool, isolation_open: bool,
                     syringe_speed: float, dt: float) -> float:
    """Chamber pressure after one step (float kernel shared with the session loop)."""
    if isolation_open:
        if fast_valve_on:
            chamber += (params.supply_kpa - chamber) * _lag(params.fill_tau, dt)
        else:
            chamber -= chamber * _lag(params.vent_tau, dt)
    else:
        chamber += params.syringe_gain * syringe_speed * dt
    return min(max(chamber, 0.0), params.supply_kpa)


def step_pneumatic(state: PlantState, params: PneumaticParams, fast_valve: ValveState,
                   isolation: IsolationState, syringe_speed: float, dt: float) -> PlantState:
    """
    气动回路单步

    隔离阀打开: 快速阀开 -> 以 fill_tau 充气到气源压力; 关 -> 以 vent_tau 排气到 0.
    隔离阀关闭: 密闭腔, 压力只随注射器位移变化 (syringe_gain·speed·dt).
    """
    check_pneumatic_step(params, dt)
    is_open = isolation is IsolationState.OPEN
    chamber = state.chamber_kpa
    if is_open or syringe_speed != 0.0:
        chamber = pneumatic_update(chamber, params, fast_valve is ValveState.ON, is_open, syringe_speed, dt)
    return replace(state, chamber_kpa=chamber, fast_valve=fast_valve, isolation_valve=isolation,
                   syringe_pos_mm=state.syringe_pos_mm + syringe_speed * dt, t=state.t + dt)


def pump_control(t_target: float, t_measured: float, kp: float) -> Tuple[float, float]:
    """
    比例控制: e = T_target - T_measured

    Returns:
        (hot_duty, cold_duty), 至多一个非零
    """
    error = t_target - t_measured
    hot = min(max(kp * error, 0.0), 1.0)
    cold = min(max(-kp * error, 0.0), 1.0)
    return hot, cold


def thermal_update(mix: float, tube: float, params: ThermalPlantParams, hot_duty: float, cold_duty: float,
                   dt: float) -> Tuple[float, float]:
    """
    混合水箱能量平衡 + 管壁一阶滞后

    V·dTm/dt = Q_h(T_hot - Tm) + Q_c(T_cold - Tm) + V(T_amb - Tm)/τ_amb
    dTt/dt = (Tm - Tt)/τ_tube
    """
    q_hot = hot_duty * params.pump_max_lps
    q_cold = cold_duty * params.pump_max_lps
    volume = params.mix_volume_l
    rate = (q_hot + q_cold) / volume + 1.0 / params.ambient_tau
    equilibrium = (q_hot * params.hot_tank_c + q_cold * params.cold_tank_c) / volume \
        + params.ambient_c / params.ambient_tau
    equilibrium /= rate
    new_mix = mix + (equilibrium - mix) * (1.0 - math.exp(-rate * dt))
    new_tube = tube + (mix - tube) * _lag(params.tube_tau, dt)
    return new_mix, new_tube


def step_thermal(state: PlantState, params: ThermalPlantParams, t_target: float, dt: float) -> PlantState:
    """热回路单步: 泵占空比由管壁温度误差决定"""
    check_thermal_step(params, dt)
    hot, cold = pump_control(t_target, state.tube_temp_c, params.kp)
    mix, tube = thermal_update(state.mix_temp_c, state.tube_temp_c, params, hot, cold, dt)
    return replace(state, mix_temp_c=mix, tube_temp_c=tube, t=state.t + dt)


def pwm_ripple(params: PneumaticParams, frequency: float, duty: float = 0.5) -> Tuple[float, float]:
    """
    一阶充放气在方波驱动下的稳态压力波动 (解析解)

    Returns:
        (p_low, p_high): 稳态最低与最高腔压
    """
    if not 0 < duty < 1 or not frequency > 0:
        raise ConfigError(f"PWM needs 0 < duty < 1 and frequency > 0, got {duty}, {frequency}")
    period = 1.0 / frequency
    a = math.exp(-duty * period / params.fill_tau)
    b = math.exp(-(1.0 - duty) * period / params.vent_tau)
    p_high = params.supply_kpa * (1.0 - a) / (1.0 - a * b)
    return b * p_high, p_high


def simulate_pneumatic(valve_states: np.ndarray, params: PneumaticParams, dt: float,
                       initial_kpa: float = 0.0) -> np.ndarray:
    """Chamber pressure under a 0/1 valve sequence with the isolation valve open."""
    check_pneumatic_step(params, dt)
    fill = _lag(params.fill_tau, dt)
    vent = _lag(params.vent_tau, dt)
    supply = params.supply_kpa
    chamber = initial_kpa
    out = np.empty(len(valve_states))
    for k, on in enumerate(np.asarray(valve_states).tolist()):
        if on:
            chamber += (supply - chamber) * fill
        else:
            chamber -= chamber * vent
        out[k] = chamber
    return out


from haptic_ring.plantsim.session import (  # noqa: E402
    PlantSimulator, SessionConfig, SessionLog, run_session,
)

__all__ = [
    'PneumaticParams', 'ThermalPlantParams', 'PlantParams', 'PlantState', 'step_pneumatic', 'pump_control',
    'step_thermal', 'pwm_ripple', 'simulate_pneumatic', 'PlantSimulator', 'SessionConfig', 'SessionLog',
    'run_session',
]
