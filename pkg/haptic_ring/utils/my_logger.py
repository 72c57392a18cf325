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

import logging
import os
import sys
from logging import handlers
from typing import Mapping, Optional

from haptic_ring.utils.read_config import app_dir

DEFAULT_FORMAT = '%(asctime)s %(name)s [%(levelname)s] %(message)s'
_HANDLER_TAG = '_haptic_ring'


def _truthy(value: Optional[str]) -> bool:
    return str(value).strip().lower() in ('1', 'true', 'yes', 'on')


def setup_logging(log_config: Optional[Mapping[str, str]] = None, console_level: Optional[str] = None) -> str:
    """
    配置根 logger: stderr 控制台输出, 可选滚动文件 (1 MB, 1 个备份)

    Args:
        log_config: [LOG] 段内容
        console_level: 覆盖控制台级别 (命令行 --verbose)

    Returns:
        str: 日志文件路径, 未开启文件日志时为空串
    """
    log_config = dict(log_config or {})
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, _HANDLER_TAG, False)]:
        root.removeHandler(handler)
        handler.close()
    formatter = logging.Formatter(log_config.get('format', DEFAULT_FORMAT))
    root.setLevel(log_config.get('level', 'INFO').upper())
    if console_level:
        root.setLevel(min(root.level, logging.getLevelName(console_level.upper())))

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel((console_level or log_config.get('console_level', 'INFO')).upper())
    setattr(console_handler, _HANDLER_TAG, True)
    root.addHandler(console_handler)

    log_file = ''
    if _truthy(log_config.get('to_file')):
        os.makedirs(app_dir.user_log_dir, exist_ok=True)
        log_file = os.path.join(app_dir.user_log_dir, 'haptic_ring.log')
        file_handler = handlers.RotatingFileHandler(log_file, encoding='utf-8', maxBytes=1024*1024, backupCount=1)
        file_handler.setFormatter(formatter)
        file_handler.setLevel(log_config.get('file_level', 'DEBUG').upper())
        setattr(file_handler, _HANDLER_TAG, True)
        root.addHandler(file_handler)
    return log_file


def get_my_logger(logger_name: str = 'main') -> logging.Logger:
    """Get a logger; installs the default console handler once if nothing is configured yet.

    Args:
        logger_name: Name of the logger (default: 'main')

    Returns:
        Configured logger instance.
    """
    logger = logging.getLogger(logger_name)
    if not any(getattr(h, _HANDLER_TAG, False) for h in logging.getLogger().handlers):
        setup_logging()
    return logger
