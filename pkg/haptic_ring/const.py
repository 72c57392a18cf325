# coding=utf-8
"""
常量与枚举 - Shared constants and enumerations
"""
from enum import Enum


class Unit(Enum):
    """Trace unit; the value is the mandatory CSV value column name."""
    NEWTON = 'force_n'
    CELSIUS = 'temp_c'
    WATT_PER_M2 = 'flux_w_m2'

    @property
    def column(self) -> str:
        return self.value

    @property
    def symbol(self) -> str:
        return {'force_n': 'N', 'temp_c': '°C', 'flux_w_m2': 'W/m²'}[self.value]


class Archetype(Enum):
    """The six study textures, in study order."""
    ROUGH_METAL = 'rough_metal'
    SMOOTH_METAL = 'smooth_metal'
    ROUGH_FOAM = 'rough_foam'
    SMOOTH_FOAM = 'smooth_foam'
    CARDBOARD = 'cardboard'
    FABRIC = 'fabric'


TEXTURES = tuple(a.value for a in Archetype)


class ValveState(Enum):
    """快速电磁阀状态"""
    OFF = 0
    ON = 1

    def toggled(self) -> 'ValveState':
        return ValveState.OFF if self is ValveState.ON else ValveState.ON


class IsolationState(Enum):
    """2/2 隔离阀状态"""
    CLOSED = 0
    OPEN = 1


class Phase(Enum):
    """会话阶段标签"""
    SLIDE_COUNTDOWN = 'slide_countdown'
    SLIDE = 'slide'
    PREPARE = 'prepare'
    COUNTDOWN = 'countdown'
    PRESS = 'press'
    HOLD = 'hold'
    LIFT = 'lift'
    TAIL = 'tail'


class SessionEvent(Enum):
    SLIDE_COUNTDOWN = 'slide_countdown'
    SLIDE_START = 'slide_start'
    PREPARE_START = 'prepare_start'
    PREPARE_DONE = 'prepare_done'
    COUNTDOWN_START = 'countdown_start'
    PRESS_START = 'press_start'
    LIFT_START = 'lift_start'
    SESSION_END = 'session_end'


# 评分维度: flat-bumpy, cold-hot, soft-stiff
RATING_COLUMNS = ('flat_bumpy', 'cold_hot', 'soft_stiff')
TRIAL_COLUMNS = ('participant', 'round', 'presented', 'selected') + RATING_COLUMNS
