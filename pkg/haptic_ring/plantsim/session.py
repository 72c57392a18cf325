# coding=utf-8
"""
渲染会话仿真 - Rendering session simulation

会话脚本:
1. 滑动倒计时 5 s, 随后 10 s 滑动 (隔离阀开, 快速阀由粗糙度方波驱动, 温度保持)
2. 准备阶段: 热回路把管壁温度带到热觉指令初值, 误差 < 0.3 °C 即结束 (可选 dwell 秒保持)
3. 倒计时 5 s, 随后按压-保持-抬起 (隔离阀关, 注射器跟随梯形曲线, 温度跟随多项式)
4. 收尾 1 s
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from haptic_ring.const import Phase, SessionEvent, ValveState
from haptic_ring.errors import ConfigError, PreparationTimeoutError
from haptic_ring.plantsim import (
    PlantParams, check_pneumatic_step, check_thermal_step, pneumatic_update, pump_control, thermal_update,
)
from haptic_ring.utils import PathLike, write_frame_csv, write_json

if TYPE_CHECKING:
    from haptic_ring.commands import CommandSet

logger = logging.getLogger('PlantSimulator')

LOG_COLUMNS = ('time_s', 'phase', 'chamber_kpa', 'mix_temp_c', 'tube_temp_c', 'target_temp_c',
               'hot_duty', 'cold_duty', 'isolation_valve', 'fast_valve', 'syringe_pos_mm')


@dataclass
class SessionConfig:
    """会话脚本配置"""
    rate_hz: float = 3000.0             # 积分频率, dt = 1/rate
    log_dt: float = 0.01                # s, 日志抽样间隔
    initial_temp_c: float = 32.0
    slide_countdown: float = 5.0
    slide_duration: float = 10.0
    prepare_tolerance: float = 0.3      # °C
    prepare_dwell: float = 0.0          # s, 0 表示误差首次进入容差即结束
    prepare_timeout: float = 120.0      # s
    countdown: float = 5.0
    tail: float = 1.0
    tracking_tolerance: float = 0.5     # °C
    tracking_skip: float = 2.0          # s

    def __post_init__(self):
        for name in ('rate_hz', 'log_dt', 'slide_duration', 'prepare_tolerance', 'prepare_timeout',
                     'tracking_tolerance'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"session.{name} must be positive, got {getattr(self, name)}")
        for name in ('slide_countdown', 'prepare_dwell', 'countdown', 'tail', 'tracking_skip'):
            if getattr(self, name) < 0:
                raise ConfigError(f"session.{name} must not be negative, got {getattr(self, name)}")
        stride = self.log_dt * self.rate_hz
        if round(stride) < 1 or abs(stride - round(stride)) > 1e-6 * stride:
            raise ConfigError(f"session.log_dt ({self.log_dt} s) must be a whole number of steps (dt = 1/{self.rate_hz} s)")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def log_stride(self) -> int:
        return int(round(self.log_dt * self.rate_hz))

    def steps(self, seconds: float) -> int:
        return int(math.ceil(seconds * self.rate_hz - 1e-6))


@dataclass(frozen=True, eq=False)
class SessionLog:
    """一次会话的仿真记录 (不可变快照)"""
    frame: pd.DataFrame
    events: Tuple[Tuple[SessionEvent, float], ...]
    metrics: Dict[str, float]
    dt: float
    log_dt: float

    def event_times(self) -> Dict[str, float]:
        return {event.value: t for event, t in self.events}

    def event_summary(self) -> dict:
        return {
            'events': [{'event': event.value, 'time_s': t} for event, t in self.events],
            'metrics': dict(self.metrics),
            'dt_s': self.dt,
            'log_dt_s': self.log_dt,
        }

    def to_csv(self, path: PathLike) -> str:
        return write_frame_csv(path, self.frame)

    def write_events(self, path: PathLike) -> str:
        return write_json(path, self.event_summary())


class PlantSimulator:
    """
    会话仿真器, 独占可变状态; 单线程推进

    每步: 记录当前状态 -> 泵控制 -> 气动更新 -> 热回路更新.
    """

    def __init__(self, params: Optional[PlantParams] = None, config: Optional[SessionConfig] = None):
        self.params = params or PlantParams()
        self.config = config or SessionConfig()
        check_pneumatic_step(self.params.pneumatic, self.config.dt)
        check_thermal_step(self.params.thermal, self.config.dt)
        self.reset()

    def reset(self):
        self.k = 0
        self.chamber = 0.0
        self.mix = self.tube = self.config.initial_temp_c
        self.syringe = 0.0
        self._rows: List[tuple] = []
        self._events: List[Tuple[SessionEvent, float]] = []
        self._slide_pressure: List[float] = []
        self._tracking_errors: List[float] = []

    @property
    def t(self) -> float:
        return self.k * self.config.dt

    def _event(self, event: SessionEvent):
        self._events.append((event, self.t))
        logger.debug('%s at %.3f s', event.value, self.t)

    def _step(self, phase: Phase, valve_on: bool, isolation_open: bool, syringe_speed: float, target: float):
        cfg, params = self.config, self.params
        hot, cold = pump_control(target, self.tube, params.thermal.kp)
        if self.k % cfg.log_stride == 0:
            self._rows.append((self.t, phase.value, self.chamber, self.mix, self.tube, target, hot, cold,
                               'OPEN' if isolation_open else 'CLOSED', 'ON' if valve_on else 'OFF', self.syringe))
        if isolation_open or syringe_speed != 0.0:
            self.chamber = pneumatic_update(self.chamber, params.pneumatic, valve_on, isolation_open,
                                            syringe_speed, cfg.dt)
        self.mix, self.tube = thermal_update(self.mix, self.tube, params.thermal, hot, cold, cfg.dt)
        self.syringe += syringe_speed * cfg.dt
        self.k += 1

    def _hold(self, phase: Phase, seconds: float, target: float, isolation_open: bool = True):
        for _ in range(self.config.steps(seconds)):
            self._step(phase, False, isolation_open, 0.0, target)

    def _slide(self, commands: CommandSet, target: float):
        cfg = self.config
        n = cfg.steps(cfg.slide_duration)
        states = commands.wave.state_array(np.arange(n) * cfg.dt).tolist()
        second_half = n // 2
        for i, state in enumerate(states):
            if i >= second_half:
                self._slide_pressure.append(self.chamber)
            self._step(Phase.SLIDE, state == ValveState.ON.value, True, 0.0, target)

    def _prepare(self, target: float):
        cfg = self.config
        dwell = max(cfg.steps(cfg.prepare_dwell), 1)
        within = 0
        for _ in range(cfg.steps(cfg.prepare_timeout)):
            within = within + 1 if abs(target - self.tube) < cfg.prepare_tolerance else 0
            if within >= dwell:
                return
            self._step(Phase.PREPARE, False, True, 0.0, target)
        raise PreparationTimeoutError(
            f"tube temperature {self.tube:.2f} °C did not reach {target:.2f} ± {cfg.prepare_tolerance} °C "
            f"within {cfg.prepare_timeout} s")

    def _press(self, commands: CommandSet):
        cfg = self.config
        profile, thermal = commands.profile, commands.thermal
        n = cfg.steps(profile.total_duration)
        t_rel = np.arange(n + 1) * cfg.dt
        positions = profile.displacement_array(t_rel)
        speeds = (np.diff(positions) / cfg.dt).tolist()
        targets = np.asarray(thermal.evaluate(t_rel[:-1])).tolist()
        rise_end, lift_time = profile.rise.duration, profile.lift_time
        lifted = False
        for i in range(n):
            t = t_rel[i]
            if t < rise_end:
                phase = Phase.PRESS
            elif t < lift_time:
                phase = Phase.HOLD
            else:
                phase = Phase.LIFT
                if not lifted:
                    self._event(SessionEvent.LIFT_START)
                    lifted = True
            if t >= cfg.tracking_skip:
                self._tracking_errors.append(abs(self.tube - targets[i]))
            self._step(phase, False, False, speeds[i], targets[i])
        return float(t_rel[-1])

    def _metrics(self, prepare_seconds: float) -> Dict[str, float]:
        slide = np.array(self._slide_pressure) if self._slide_pressure else np.zeros(1)
        errors = np.array(self._tracking_errors) if self._tracking_errors else np.zeros(1)
        tolerance = self.config.tracking_tolerance
        return {
            'slide_ripple_kpa': float(slide.max() - slide.min()),
            'slide_mean_kpa': float(slide.mean()),
            'slide_max_kpa': float(slide.max()),
            'prepare_duration_s': prepare_seconds,
            'tracking_max_error_c': float(errors.max()),
            'tracking_mean_error_c': float(errors.mean()),
            'tracking_tolerance_c': tolerance,
            'tracking_ok': bool(errors.max() <= tolerance),
            'session_duration_s': self.t,
        }

    def run(self, commands: CommandSet) -> SessionLog:
        """执行完整会话脚本, 返回 SessionLog; 准备阶段超时抛出 PreparationTimeoutError"""
        cfg = self.config
        self.reset()
        hold_temp = self.tube
        initial = commands.thermal.initial_temp
        pneumatic = self.params.pneumatic
        sealed_kpa = commands.profile.target_displacement * pneumatic.syringe_gain
        if sealed_kpa > pneumatic.supply_kpa:
            logger.warning('%s: %.3g mm stroke needs %.3g kPa, chamber clamps at the %.3g kPa supply',
                           commands.name, commands.profile.target_displacement, sealed_kpa, pneumatic.supply_kpa)

        self._event(SessionEvent.SLIDE_COUNTDOWN)
        self._hold(Phase.SLIDE_COUNTDOWN, cfg.slide_countdown, hold_temp)
        self._event(SessionEvent.SLIDE_START)
        self._slide(commands, hold_temp)

        self._event(SessionEvent.PREPARE_START)
        prepare_start = self.t
        logger.info('%s: preparing tube %.2f -> %.2f °C', commands.name, self.tube, initial)
        self._prepare(initial)
        prepare_seconds = self.t - prepare_start
        self._event(SessionEvent.PREPARE_DONE)

        self._event(SessionEvent.COUNTDOWN_START)
        self._hold(Phase.COUNTDOWN, cfg.countdown, initial)
        self._event(SessionEvent.PRESS_START)
        press_seconds = self._press(commands)
        final_target = commands.thermal.evaluate(press_seconds)
        for _ in range(cfg.steps(cfg.tail)):
            self._step(Phase.TAIL, False, False, 0.0, final_target)
        self._event(SessionEvent.SESSION_END)
        if self.k % cfg.log_stride == 0:
            hot, cold = pump_control(final_target, self.tube, self.params.thermal.kp)
            self._rows.append((self.t, Phase.TAIL.value, self.chamber, self.mix, self.tube, final_target,
                               hot, cold, 'CLOSED', 'OFF', self.syringe))

        metrics = self._metrics(prepare_seconds)
        if not metrics['tracking_ok']:
            logger.warning('%s: thermal tracking error %.3f °C exceeds %.3f °C', commands.name,
                           metrics['tracking_max_error_c'], cfg.tracking_tolerance)
        frame = pd.DataFrame.from_records(self._rows, columns=list(LOG_COLUMNS))
        return SessionLog(frame, tuple(self._events), metrics, cfg.dt, cfg.log_dt)


def run_session(commands: CommandSet, params: Optional[PlantParams] = None,
                config: Optional[SessionConfig] = None) -> SessionLog:
    """Simulate one slide + press-wait-lift session for a CommandSet."""
    return PlantSimulator(params, config).run(commands)
