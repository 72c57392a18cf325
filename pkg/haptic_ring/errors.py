# coding=utf-8
"""
错误定义模块 - Error Definitions

所有可预期的失败都抛出 HapticRingError 的子类。每个类带有:
- exit_code: 命令行退出码 (2 配置, 3 读取, 4 渲染, 5 仿真超时, 6 统计)
- code: 字符串错误码, 用于日志与标准错误输出
"""
from __future__ import annotations

from typing import Optional


class HapticRingError(Exception):
    """Base class of every error raised on purpose by haptic_ring."""
    exit_code: int = 1
    code: str = "HR_000"

    @property
    def message(self) -> str:
        return str(self.args[0]) if self.args else ""

    def __str__(self):
        return f"{type(self).__name__}[{self.code}]: {super().__str__()}"


# 配置错误 exit 2
class ConfigError(HapticRingError):
    exit_code = 2
    code = "CONFIG_001"


class StepSizeError(ConfigError):
    """Integration step too coarse for the plant model."""
    code = "CONFIG_002"


# 数据读取错误 exit 3
class IngestionError(HapticRingError):
    exit_code = 3
    code = "INGEST_000"


class MissingFileError(IngestionError):
    code = "INGEST_001"


class ManifestError(IngestionError):
    code = "INGEST_002"


class NonMonotonicTimestampsError(IngestionError):
    code = "INGEST_003"


class NonUniformSamplingError(IngestionError):
    code = "INGEST_004"


class UnitMismatchError(IngestionError):
    code = "INGEST_005"


class BitDepthError(IngestionError):
    code = "INGEST_006"


class InvalidTraceError(IngestionError):
    code = "INGEST_007"


# 渲染错误 exit 4
class RenderingError(HapticRingError):
    exit_code = 4
    code = "RENDER_000"


class NoContactOnsetError(RenderingError):
    code = "RENDER_001"


class NoInteriorPeakError(RenderingError):
    code = "RENDER_002"


class DegenerateIntervalError(RenderingError):
    code = "RENDER_003"


class InvalidRangeError(RenderingError):
    code = "RENDER_004"


class FilterDesignError(RenderingError):
    code = "RENDER_005"


class MisalignedSeriesError(RenderingError):
    code = "RENDER_006"


class PolyFitError(RenderingError):
    code = "RENDER_007"


class UnknownArchetypeError(RenderingError):
    code = "RENDER_008"


# 仿真错误 exit 5
class SimulationError(HapticRingError):
    exit_code = 5
    code = "SIM_000"


class PreparationTimeoutError(SimulationError):
    """Tube temperature never reached the command's initial value."""
    code = "SIM_001"


# 统计错误 exit 6
class StatsError(HapticRingError):
    exit_code = 6
    code = "STATS_000"


class StatsInputError(StatsError):
    code = "STATS_001"


class StatsSchemaError(StatsError):
    """Trial table violates its schema; names the offending row and column."""
    code = "STATS_002"

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        self.detail = message
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
