# coding=utf-8
"""
命令行模块 - Command Line Module

子命令:
- render        纹理记录 -> 位移曲线 / 热觉多项式 / 阀门方波
- simulate      指令集 -> 装置会话仿真日志
- eval          试验 CSV -> 混淆矩阵, 卡方, KS, Kruskal-Wallis
- gen-fixtures  生成六种原型纹理记录, 合成试验数据与配置文件

退出码: 0 成功, 2 配置, 3 读取, 4 渲染, 5 仿真, 6 统计.
"""
from __future__ import annotations

import functools
import glob
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import Field, PrivateAttr, ValidationError
from pydantic_settings import (
    BaseSettings, CliApp, CliSubCommand, SettingsConfigDict, SettingsError, get_subcommand,
)
from tqdm import tqdm

from haptic_ring.commands import (
    CommandSet, command_file_names, load_command_set, render_commands, summary_frame, write_command_set,
)
from haptic_ring.errors import ConfigError, HapticRingError, ManifestError
from haptic_ring.evalstats import evaluate_trials, load_trials, save_trials, synthesize_trials
from haptic_ring.plantsim import run_session
from haptic_ring.softness import analyze_press, compute_slope_range
from haptic_ring.texdata import TextureRecording, load_recording, write_fixture_set
from haptic_ring.utils import ensure_dir, write_frame_csv, write_json
from haptic_ring.utils.my_logger import get_my_logger, setup_logging
from haptic_ring.utils.read_config import RunConfig, default_run_config, load_run_config, write_example_config

logger = logging.getLogger('cli')


def _guarded(func: Callable[..., int]) -> Callable[..., int]:
    """HapticRingError -> 日志 + 对应退出码"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except HapticRingError as e:
            get_my_logger('cli').error('%s', e)
            return e.exit_code
    return wrapper


def _prepare(config_path: str, verbose: bool = False) -> RunConfig:
    run_config = load_run_config(config_path)
    setup_logging(run_config.log, 'DEBUG' if verbose else None)
    return run_config


def _progress(names: List[str], desc: str):
    return tqdm(names, desc=desc, unit='texture', file=sys.stderr, disable=None, leave=False)


def load_texture_set(run_config: RunConfig) -> Dict[str, TextureRecording]:
    """Load every configured texture; the manifest name must match its config key."""
    recordings = {}
    for name in sorted(run_config.textures):
        rec = load_recording(run_config.textures[name])
        if rec.name != name:
            raise ManifestError(f"[textures] key {name!r} points at a manifest named {rec.name!r}")
        recordings[name] = rec
    return recordings


def resolve_slope_range(run_config: RunConfig, recordings: Dict[str, TextureRecording]) -> Tuple[float, float]:
    softness = run_config.softness
    if softness.slope_range is not None:
        return tuple(softness.slope_range)
    press_slopes = [analyze_press(rec, softness)[1].press_slope for rec in recordings.values()]
    return compute_slope_range(press_slopes, softness.fallback_slope_range)


def _selection(texture: Optional[str], all_textures: bool) -> None:
    if texture and all_textures:
        raise ConfigError('use either --texture or --all, not both')
    if not texture and not all_textures:
        raise ConfigError('select textures with --texture NAME or --all')


@_guarded
def cmd_render(config: str, texture: Optional[str] = None, all_textures: bool = False, out: Optional[str] = None,
               dense: bool = False, verbose: bool = False) -> int:
    """
    渲染指令集

    即使只渲染一个纹理, 也读取全部纹理以确定按压斜率范围.
    """
    run_config = _prepare(config, verbose)
    _selection(texture, all_textures)
    run_config.validate_textures()
    names = run_config.select(texture)
    out_dir = ensure_dir(out or run_config.output_dir)
    dense = dense or run_config.dense

    recordings = load_texture_set(run_config)
    slope_range = resolve_slope_range(run_config, recordings)
    logger.info('slope range %.4g .. %.4g N/s over %d textures', slope_range[0], slope_range[1], len(recordings))

    rendered: List[CommandSet] = []
    outputs: Dict[str, List[str]] = {}
    for name in _progress(names, 'render'):
        commands = render_commands(recordings[name], run_config.softness, run_config.thermal,
                                   run_config.roughness, slope_range)
        paths = write_command_set(commands, out_dir, run_config.profile_rate, dense, run_config.dense_rate)
        outputs[name] = [os.path.basename(p) for p in paths]
        rendered.append(commands)

    write_frame_csv(os.path.join(out_dir, 'summary.csv'), summary_frame(rendered))
    write_json(os.path.join(out_dir, 'outputs.json'), {
        'textures': outputs,
        'slope_range_n_s': list(slope_range),
        'dense': dense,
    })
    for commands in rendered:
        row = commands.summary_row()
        print(f"{row['texture']:<13} rise {row['rise_speed_mm_s']:6.2f} mm/s  "
              f"thermal {row['initial_temp_c']:5.2f} -> {row['final_temp_c']:5.2f} °C  "
              f"{row['transitions']:5d} valve transitions")
    print(f'wrote {sum(len(v) for v in outputs.values()) + 2} files to {out_dir}')
    return 0


def _rendered_names(commands_dir: str) -> List[str]:
    suffix = command_file_names('')['commands']
    found = glob.glob(os.path.join(commands_dir, f'*{suffix}'))
    return sorted(os.path.basename(p)[:-len(suffix)] for p in found)


@_guarded
def cmd_simulate(config: str, commands: Optional[str] = None, texture: Optional[str] = None,
                 out: Optional[str] = None, verbose: bool = False) -> int:
    """Run the session script for rendered command sets."""
    run_config = _prepare(config, verbose)
    commands_dir = commands or run_config.output_dir
    if not os.path.isdir(commands_dir):
        raise ConfigError(f"commands directory not found: {commands_dir}")
    names = [texture] if texture else _rendered_names(commands_dir)
    if not names:
        raise ConfigError(f"no rendered command sets in {commands_dir}")
    out_dir = ensure_dir(out or commands_dir)

    rows = []
    for name in _progress(names, 'simulate'):
        command_set = load_command_set(commands_dir, name)
        log = run_session(command_set, run_config.plant, run_config.session)
        log.to_csv(os.path.join(out_dir, f'{name}_session.csv'))
        log.write_events(os.path.join(out_dir, f'{name}_events.json'))
        metrics = log.metrics
        rows.append(dict(texture=name, **metrics))
        print(f"{name:<13} tracking max {metrics['tracking_max_error_c']:.3f} °C "
              f"mean {metrics['tracking_mean_error_c']:.3f} °C  "
              f"slide ripple {metrics['slide_ripple_kpa']:.2f} kPa "
              f"mean {metrics['slide_mean_kpa']:.2f} kPa  "
              f"prepare {metrics['prepare_duration_s']:.1f} s")
    write_frame_csv(os.path.join(out_dir, 'simulation_summary.csv'), pd.DataFrame(rows))
    return 0


@_guarded
def cmd_eval(config: str, trials: str, out: Optional[str] = None, exclude_round: int = 1,
             verbose: bool = False) -> int:
    """Statistics report over a trials CSV."""
    run_config = _prepare(config, verbose)
    records = load_trials(trials)
    report = evaluate_trials(records, exclude_round if exclude_round > 0 else None)
    print(report.to_text(), end='')
    out_dir = ensure_dir(out or run_config.output_dir)
    for path in report.write_csv(out_dir):
        logger.info('wrote %s', path)
    return 0


@_guarded
def cmd_gen_fixtures(config: str, out: str, seed: Optional[int] = None, verbose: bool = False) -> int:
    """
    生成原型纹理, 合成试验数据与可直接 render 的配置

    只写入 --out 目录; --config 存在时读取其中的 [fixtures] seed 与 [LOG].
    """
    if os.path.isfile(config):
        run_config = _prepare(config, verbose)
    else:
        run_config = default_run_config()
        setup_logging(run_config.log, 'DEBUG' if verbose else None)
    seed = run_config.fixtures_seed if seed is None else seed
    out_dir = ensure_dir(out)
    manifests = write_fixture_set(os.path.join(out_dir, 'fixtures'), seed)
    trials_path = save_trials(synthesize_trials(seed=seed), os.path.join(out_dir, 'trials.csv'))
    textures = {name: os.path.relpath(path, out_dir).replace(os.sep, '/') for name, path in manifests.items()}
    config_path = write_example_config(os.path.join(out_dir, 'haptic_ring.ini'), textures, seed)
    for name in sorted(manifests):
        print(f'{name:<13} {manifests[name]}')
    print(f'trials        {trials_path}')
    print(f'config        {config_path}')
    return 0


class _Command(BaseSettings):
    model_config = SettingsConfigDict(cli_kebab_case=True, cli_implicit_flags=True)
    _exit_code: int = PrivateAttr(default=0)

    config: str = Field(description='INI configuration file')
    verbose: bool = Field(False, description='debug logging on stderr')

    @classmethod
    def settings_customise_sources(cls, settings_cls, init_settings, env_settings, dotenv_settings,
                                   file_secret_settings):
        return (init_settings,)

    @property
    def exit_code(self) -> int:
        return self._exit_code


class RenderCLI(_Command):
    """Render pressure, thermal and roughness commands for textures."""
    texture: Optional[str] = Field(None, description='render a single texture')
    all: bool = Field(False, description='render every configured texture')
    out: Optional[str] = Field(None, description='output directory (default: [output] dir)')
    dense: bool = Field(False, description='also write the 1 kHz valve trace')

    def cli_cmd(self) -> None:
        self._exit_code = cmd_render(self.config, self.texture, self.all, self.out, self.dense, self.verbose)


class SimulateCLI(_Command):
    """Simulate the slide / press-wait-lift session on the plant model."""
    commands: Optional[str] = Field(None, description='directory written by render (default: [output] dir)')
    texture: Optional[str] = Field(None, description='simulate a single texture')
    out: Optional[str] = Field(None, description='output directory (default: the commands directory)')

    def cli_cmd(self) -> None:
        self._exit_code = cmd_simulate(self.config, self.commands, self.texture, self.out, self.verbose)


class EvalCLI(_Command):
    """Confusion matrix, chi-squared, KS and Kruskal-Wallis over a trials CSV."""
    trials: str = Field(description='trials CSV')
    out: Optional[str] = Field(None, description='output directory (default: [output] dir)')
    exclude_round: int = Field(1, description='training round to exclude (0 keeps all)')

    def cli_cmd(self) -> None:
        self._exit_code = cmd_eval(self.config, self.trials, self.out, self.exclude_round, self.verbose)


class GenFixturesCLI(_Command):
    """Write the six archetype recordings, synthetic trials and a ready-to-render config."""
    out: str = Field(description='output directory')
    seed: Optional[int] = Field(None, description='random seed (default: [fixtures] seed)')

    def cli_cmd(self) -> None:
        self._exit_code = cmd_gen_fixtures(self.config, self.out, self.seed, self.verbose)


class HapticRingCLI(BaseSettings):
    """Action-based multimodal texture rendering for a haptic ring."""
    model_config = SettingsConfigDict(cli_kebab_case=True, cli_implicit_flags=True, cli_prog_name='haptic-ring')

    render: CliSubCommand[RenderCLI]
    simulate: CliSubCommand[SimulateCLI]
    eval: CliSubCommand[EvalCLI]
    gen_fixtures: CliSubCommand[GenFixturesCLI] = Field(alias='gen-fixtures')

    @classmethod
    def settings_customise_sources(cls, settings_cls, init_settings, env_settings, dotenv_settings,
                                   file_secret_settings):
        return (init_settings,)

    def cli_cmd(self) -> None:
        """Run one of the subcommands."""
        CliApp.run_subcommand(self)


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the chosen subcommand and return its exit code."""
    args = sys.argv[1:] if argv is None else list(argv)
    if not args:
        args = ['--help']
    try:
        app = CliApp.run(HapticRingCLI, cli_args=args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except HapticRingError as e:
        get_my_logger('cli').error('%s', e)
        return e.exit_code
    except (SettingsError, ValidationError) as e:
        get_my_logger('cli').error('%s', e)
        return ConfigError.exit_code
    try:
        return get_subcommand(app).exit_code
    except SettingsError as e:
        get_my_logger('cli').error('%s', e)
        return ConfigError.exit_code


__all__ = [
    'cmd_render', 'cmd_simulate', 'cmd_eval', 'cmd_gen_fixtures', 'run_cli', 'HapticRingCLI', 'RenderCLI',
    'SimulateCLI', 'EvalCLI', 'GenFixturesCLI', 'load_texture_set', 'resolve_slope_range',
]
