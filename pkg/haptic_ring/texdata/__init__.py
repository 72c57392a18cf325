# coding=utf-8
"""
纹理数据模块 - Texture Recording Module

提供纹理交互记录的数据模型与读写:
- TimeSeries / SurfaceImage / TextureRecording: 不可变数据对象
- load_recording: 读取 manifest 及其引用的 CSV 与灰度图像, 并校验
- save_recording: 以规范格式写回 (CSV 逐字节可复现)
- detect_contact_onset: 由热流检测手指接触时刻
"""
from __future__ import annotations

import configparser
import io
import logging
import os
import re
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image, UnidentifiedImageError

from haptic_ring.const import Unit
from haptic_ring.errors import (
    BitDepthError, InvalidTraceError, ManifestError, MissingFileError,
    NoContactOnsetError, NonMonotonicTimestampsError, NonUniformSamplingError,
    UnitMismatchError,
)
from haptic_ring.utils import PathLike, atomic_write_bytes, atomic_write_text, ensure_dir, write_frame_csv

logger = logging.getLogger('TextureData')

TIME_COLUMN = 'time_s'
UNIFORM_STEP_RTOL = 1e-6
SKIN_TEMP_BOUNDS = (15.0, 45.0)
ONSET_THRESHOLD = 50.0      # W/m²
ONSET_HOLD = 0.2            # s
MANIFEST_SECTION = 'texture'

# 8 位可直接转换为亮度的模式, 其余 (1 / I;16 / I / F ...) 一律拒绝
_LUMINANCE_MODES = frozenset({'RGB', 'RGBA', 'P', 'LA'})
_NAME_PATTERN = re.compile(r'^[A-Za-z0-9_.-]+$')


def _readonly(values, name: str) -> np.ndarray:
    try:
        array = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidTraceError(f"{name} is not numeric: {e}") from e
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """均匀采样的带单位时间序列"""
    timestamps: np.ndarray
    values: np.ndarray
    unit: Unit

    def __post_init__(self):
        t = _readonly(self.timestamps, 'timestamps')
        v = _readonly(self.values, 'values')
        if t.ndim != 1 or v.ndim != 1:
            raise InvalidTraceError("timestamps and values must be one-dimensional")
        if len(t) != len(v):
            raise InvalidTraceError(f"{len(t)} timestamps but {len(v)} values")
        if len(t) < 2:
            raise InvalidTraceError("a time series needs at least 2 samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InvalidTraceError("time series contains NaN or infinite entries")
        steps = np.diff(t)
        bad = np.flatnonzero(steps <= 0)
        if len(bad):
            raise NonMonotonicTimestampsError(
                f"timestamps not strictly increasing at t={t[bad[0] + 1]!r} (sample {bad[0] + 1})")
        mean_step = (t[-1] - t[0]) / (len(t) - 1)
        worst = float(np.max(np.abs(steps - mean_step)))
        if worst > UNIFORM_STEP_RTOL * mean_step:
            raise NonUniformSamplingError(
                f"sampling step deviates by {worst:.3g} s from the mean step {mean_step:.6g} s")
        object.__setattr__(self, 'timestamps', t)
        object.__setattr__(self, 'values', v)

    def __len__(self):
        return len(self.timestamps)

    @property
    def dt(self) -> float:
        return float((self.timestamps[-1] - self.timestamps[0]) / (len(self) - 1))

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def start(self) -> float:
        return float(self.timestamps[0])

    @property
    def end(self) -> float:
        return float(self.timestamps[-1])

    @property
    def duration(self) -> float:
        return self.end - self.start

    def with_values(self, values) -> TimeSeries:
        return TimeSeries(self.timestamps, values, self.unit)

    def shifted(self, delta: float) -> TimeSeries:
        return TimeSeries(self.timestamps + delta, self.values, self.unit)

    def trimmed(self, t_start: float) -> TimeSeries:
        """Keep samples with t >= t_start."""
        mask = self.timestamps >= t_start - 1e-9 * self.dt
        return TimeSeries(self.timestamps[mask], self.values[mask], self.unit)

    def same_grid(self, other: TimeSeries) -> bool:
        return len(self) == len(other) and bool(np.array_equal(self.timestamps, other.timestamps))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({TIME_COLUMN: self.timestamps, self.unit.column: self.values})


@dataclass(frozen=True, eq=False)
class SurfaceImage:
    """灰度表面图像, 像素按行存储, 取值 [0, 255]"""
    pixels: np.ndarray
    mm_per_pixel: float

    def __post_init__(self):
        pixels = _readonly(self.pixels, 'pixels')
        if pixels.ndim != 2:
            raise InvalidTraceError(f"image must be 2-D, got shape {pixels.shape}")
        height, width = pixels.shape
        if width < 3 or height < 3:
            raise InvalidTraceError(f"image must be at least 3x3 pixels, got {width}x{height}")
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0 or pixels.max() > 255:
            raise InvalidTraceError("image intensities must lie in [0, 255]")
        if not self.mm_per_pixel > 0:
            raise InvalidTraceError(f"mm_per_pixel must be positive, got {self.mm_per_pixel}")
        object.__setattr__(self, 'pixels', pixels)
        object.__setattr__(self, 'mm_per_pixel', float(self.mm_per_pixel))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class TextureRecording:
    """一个表面的多模态记录"""
    name: str
    press_force: TimeSeries
    skin_temp: TimeSeries
    heat_flux: TimeSeries
    image: SurfaceImage
    thermal_conductivity_hint: Optional[float] = None

    def __post_init__(self):
        for label, series, unit in (('press_force', self.press_force, Unit.NEWTON),
                                    ('skin_temp', self.skin_temp, Unit.CELSIUS),
                                    ('heat_flux', self.heat_flux, Unit.WATT_PER_M2)):
            if series.unit is not unit:
                raise UnitMismatchError(f"{self.name}: {label} must be in {unit.symbol}, got {series.unit.symbol}")
        if np.any(self.press_force.values < 0):
            raise InvalidTraceError(f"{self.name}: press force contains negative values")
        if self.thermal_conductivity_hint is not None and not self.thermal_conductivity_hint > 0:
            raise InvalidTraceError(f"{self.name}: thermal conductivity hint must be positive")
        low, high = SKIN_TEMP_BOUNDS
        outside = int(np.count_nonzero((self.skin_temp.values < low) | (self.skin_temp.values > high)))
        if outside:
            logger.warning('%s: %d skin temperature samples outside [%g, %g] °C', self.name, outside, low, high)


def detect_contact_onset(flux: TimeSeries, threshold: float = ONSET_THRESHOLD,
                         hold: float = ONSET_HOLD) -> float:
    """
    检测接触起点: |flux| 连续超过阈值至少 hold 秒的第一个时刻

    Args:
        flux: 热流序列 (W/m²)
        threshold: θ_on
        hold: d_hold, 秒

    Returns:
        float: 起点时刻 (取自原始时间戳)
    """
    if len(flux) < 10:
        raise InvalidTraceError(f"onset detection needs at least 10 samples, got {len(flux)}")
    # 窗口内首尾时间差 >= hold
    window = int(np.ceil(hold / flux.dt - 1e-6)) + 1 if hold > 0 else 1
    if window > len(flux):
        raise NoContactOnsetError(f"trace of {flux.duration:.3g} s is shorter than the onset hold {hold} s")
    above = np.abs(flux.values) > threshold
    sustained = np.flatnonzero(sliding_window_view(above, window).all(axis=1))
    if not len(sustained):
        raise NoContactOnsetError(
            f"|flux| never exceeds {threshold} W/m² for {hold} s; recording has no contact")
    return float(flux.timestamps[sustained[0]])


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise MissingFileError(f"{what} not found: {path}")
    return path


def read_trace(path: PathLike, unit: Unit) -> TimeSeries:
    """Read a `time_s,<column>` CSV trace; the header decides the unit."""
    path = _require_file(os.fspath(path), f'{unit.column} trace')
    try:
        frame = pd.read_csv(path, float_precision='round_trip', encoding='utf-8')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InvalidTraceError(f"{path}: unreadable CSV ({e})") from e
    columns = [str(c).strip() for c in frame.columns]
    expected = [TIME_COLUMN, unit.column]
    if columns != expected:
        known = {u.column for u in Unit}
        found = [c for c in columns if c in known]
        hint = f" (found {found[0]})" if found and found[0] != unit.column else ''
        raise UnitMismatchError(f"{path}: expected header '{','.join(expected)}', got '{','.join(columns)}'{hint}")
    try:
        t = frame[TIME_COLUMN].to_numpy(dtype=np.float64)
        v = frame[unit.column].to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidTraceError(f"{path}: non-numeric entries ({e})") from e
    try:
        return TimeSeries(t, v, unit)
    except (NonMonotonicTimestampsError, NonUniformSamplingError, InvalidTraceError) as e:
        raise type(e)(f"{path}: {e.args[0]}") from e


def read_image(path: PathLike, mm_per_pixel: float) -> SurfaceImage:
    """Read an 8-bit grayscale PNG or PGM; 8-bit color images are reduced to luminance."""
    path = _require_file(os.fspath(path), 'surface image')
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == 'L':
                gray = img
            elif mode in _LUMINANCE_MODES:
                # ITU-R 601-2: L = 0.299 R + 0.587 G + 0.114 B
                logger.warning('%s: %s image converted to 8-bit luminance', path, mode)
                gray = img.convert('L')
            else:
                raise BitDepthError(f"{path}: image mode {mode} is not 8-bit grayscale")
            pixels = np.asarray(gray, dtype=np.float64)
    except UnidentifiedImageError as e:
        raise InvalidTraceError(f"{path}: not a PNG/PGM image") from e
    return SurfaceImage(pixels, mm_per_pixel)


def load_recording(manifest_path: PathLike) -> TextureRecording:
    """
    读取纹理 manifest 并返回校验后的 TextureRecording

    manifest 为 INI 文件, [texture] 段含 name / force / temperature / flux /
    image / mm_per_pixel, 可选 thermal_conductivity. 相对路径相对 manifest 所在目录.
    """
    manifest_path = _require_file(os.fspath(manifest_path), 'manifest')
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(manifest_path, 'rt', encoding='utf-8') as f:
            parser.read_file(f)
    except (configparser.Error, UnicodeDecodeError) as e:
        raise ManifestError(f"{manifest_path}: {e}") from e
    if not parser.has_section(MANIFEST_SECTION):
        raise ManifestError(f"{manifest_path}: missing [{MANIFEST_SECTION}] section")
    section = parser[MANIFEST_SECTION]
    for key in ('name', 'force', 'temperature', 'flux', 'image', 'mm_per_pixel'):
        if not section.get(key, '').strip():
            raise ManifestError(f"{manifest_path}: missing key '{key}'")
    name = section['name'].strip()
    if not _NAME_PATTERN.match(name):
        raise ManifestError(f"{manifest_path}: invalid texture name '{name}'")
    try:
        mm_per_pixel = section.getfloat('mm_per_pixel')
        conductivity = section.getfloat('thermal_conductivity', fallback=None)
    except ValueError as e:
        raise ManifestError(f"{manifest_path}: {e}") from e
    if not mm_per_pixel > 0:
        raise ManifestError(f"{manifest_path}: mm_per_pixel must be positive")
    base = os.path.dirname(os.path.abspath(manifest_path))

    def resolve(key: str) -> str:
        return os.path.join(base, section[key].strip())

    recording = TextureRecording(
        name=name,
        press_force=read_trace(resolve('force'), Unit.NEWTON),
        skin_temp=read_trace(resolve('temperature'), Unit.CELSIUS),
        heat_flux=read_trace(resolve('flux'), Unit.WATT_PER_M2),
        image=read_image(resolve('image'), mm_per_pixel),
        thermal_conductivity_hint=conductivity,
    )
    logger.debug('loaded %s: %d force, %d temperature, %d flux samples, %dx%d image', name,
                 len(recording.press_force), len(recording.skin_temp), len(recording.heat_flux),
                 recording.image.width, recording.image.height)
    return recording


def recording_file_names(name: str) -> Dict[str, str]:
    return {
        'force': f'{name}_force.csv',
        'temperature': f'{name}_temperature.csv',
        'flux': f'{name}_flux.csv',
        'image': f'{name}_image.pgm',
        'manifest': f'{name}.ini',
    }


def save_recording(rec: TextureRecording, directory: PathLike) -> str:
    """
    以规范格式保存记录, 返回 manifest 路径

    CSV: 表头 + LF 行尾 + 最短往返浮点表示; 图像: 8 位二进制 PGM (P5).
    """
    directory = ensure_dir(directory)
    names = recording_file_names(rec.name)
    write_frame_csv(os.path.join(directory, names['force']), rec.press_force.to_frame())
    write_frame_csv(os.path.join(directory, names['temperature']), rec.skin_temp.to_frame())
    write_frame_csv(os.path.join(directory, names['flux']), rec.heat_flux.to_frame())
    buffer = io.BytesIO()
    Image.fromarray(rec.image.to_uint8()).save(buffer, format='PPM')
    atomic_write_bytes(os.path.join(directory, names['image']), buffer.getvalue())

    parser = configparser.ConfigParser(interpolation=None)
    parser[MANIFEST_SECTION] = {
        'name': rec.name,
        'force': names['force'],
        'temperature': names['temperature'],
        'flux': names['flux'],
        'image': names['image'],
        'mm_per_pixel': repr(rec.image.mm_per_pixel),
    }
    if rec.thermal_conductivity_hint is not None:
        parser[MANIFEST_SECTION]['thermal_conductivity'] = repr(float(rec.thermal_conductivity_hint))
    text = io.StringIO()
    parser.write(text)
    manifest_path = os.path.join(directory, names['manifest'])
    atomic_write_text(manifest_path, text.getvalue())
    return manifest_path


__all__ = [
    'TimeSeries', 'SurfaceImage', 'TextureRecording', 'detect_contact_onset',
    'load_recording', 'save_recording', 'read_trace', 'read_image', 'recording_file_names',
    'ONSET_THRESHOLD', 'ONSET_HOLD', 'TIME_COLUMN',
]

from haptic_ring.texdata.fixtures import generate_fixture, write_fixture_set, ARCHETYPE_PARAMS  # noqa: E402

__all__ += ['generate_fixture', 'write_fixture_set', 'ARCHETYPE_PARAMS']
