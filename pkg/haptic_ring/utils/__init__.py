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
import tempfile
from typing import Any, Union

import ujson as json
import pandas as pd

logger = logging.getLogger('utils')

PathLike = Union[str, os.PathLike]


def ensure_dir(path: PathLike) -> str:
    path = os.fspath(path)
    os.path.exists(path) or os.makedirs(path)
    return path


def atomic_write_bytes(path: PathLike, data: bytes) -> str:
    """
    原子写文件: 先写同目录临时文件, 再 os.replace 覆盖目标

    Args:
        path: 目标文件
        data: 文件内容

    Returns:
        str: 目标文件路径
    """
    path = os.fspath(path)
    directory = ensure_dir(os.path.dirname(os.path.abspath(path)))
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> str:
    return atomic_write_bytes(path, text.encode('utf-8'))


def frame_to_csv_text(frame: pd.DataFrame) -> str:
    """Canonical CSV: header row, no index, LF endings, shortest round-trip floats."""
    return frame.to_csv(index=False, lineterminator='\n')


def write_frame_csv(path: PathLike, frame: pd.DataFrame) -> str:
    return atomic_write_text(path, frame_to_csv_text(frame))


def dumps_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def write_json(path: PathLike, payload: Any) -> str:
    return atomic_write_text(path, dumps_json(payload))


def read_json(path: PathLike) -> Any:
    with open(path, 'rt', encoding='utf-8') as f:
        return json.load(f)
