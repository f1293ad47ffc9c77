#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
数据管理器
统一处理输入描述文件、报告输出和容差配置
"""

import configparser
import csv
import io
import json
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import Config, SUCCESS_MESSAGES
from exception_handler import (
    ConfigException, ErrorCode, FileSystemException, exception_to_app_exception
)
from logger import get_logger

log = get_logger("data")


def _to_builtin(value: Any) -> Any:
    """numpy 对象转为可 JSON 序列化的内置类型"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    return value


def format_float(value: Any) -> str:
    """17 位有效数字输出浮点数"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return format(float(value), ".17g")


class DataManager:
    """数据管理器类"""

    def __init__(self, tolerance_file: Optional[str] = None):
        """初始化数据管理器"""
        self.tolerance_file = tolerance_file or Config.USER_CONFIG_FILE

    # ==================== JSON 读写 ====================

    def load_json(self, path: str) -> Any:
        """读取 JSON 文件"""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                content = f.read().strip()
            if content.startswith('\ufeff'):  # 移除BOM
                content = content[1:]
            data = json.loads(content)
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise exception_to_app_exception(e)
        log.debug(f"读取 {path}")
        return data

    def save_json(self, data: Any, path: Optional[str] = None) -> str:
        """写出 JSON，path 为空时返回文本"""
        text = json.dumps(_to_builtin(data), ensure_ascii=False, indent=2) + "\n"
        if path:
            self.write_text(path, text)
        return text

    def write_text(self, path: str, text: str):
        try:
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as e:
            raise exception_to_app_exception(e)
        log.info(f"{SUCCESS_MESSAGES['report_written']} {path}")

    # ==================== 描述文件 ====================

    def load_lattice_descriptor(self, path: str) -> Dict[str, Any]:
        """读取晶格描述"""
        data = self.load_json(path)
        if not isinstance(data, dict) or 'kind' not in data:
            raise FileSystemException(
                f"晶格描述缺少 kind 字段: {path}",
                ErrorCode.FILE_CORRUPTED,
                details={'file_path': path}
            )
        return data

    def load_region(self, path: str) -> List[int]:
        """读取区域文件 {"members": [...]}"""
        data = self.load_json(path)
        if not isinstance(data, dict) or not isinstance(data.get('members'), list):
            raise FileSystemException(
                f"区域文件缺少 members 列表: {path}",
                ErrorCode.FILE_CORRUPTED,
                details={'file_path': path}
            )
        try:
            return [int(v) for v in data['members']]
        except (TypeError, ValueError) as e:
            raise FileSystemException(
                f"区域成员必须为整数: {path}",
                ErrorCode.FILE_CORRUPTED,
                details={'file_path': path},
                cause=e
            )

    def load_coupling_spec(self, path: str) -> Dict[str, Any]:
        """读取耦合文件（显式矩阵或 builder 简写）"""
        data = self.load_json(path)
        if not isinstance(data, dict) or ('builder' not in data and 'vx' not in data):
            raise FileSystemException(
                f"耦合文件需要 builder 或 vx/vp 字段: {path}",
                ErrorCode.FILE_CORRUPTED,
                details={'file_path': path}
            )
        return data

    # ==================== CSV 输出 ====================

    def render_csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """生成 CSV 文本，浮点数保留 17 位有效数字"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
        return buffer.getvalue()

    # ==================== 容差配置 (INI格式) ====================

    def load_tolerances(self, path: Optional[str] = None) -> Dict[str, str]:
        """读取 [tolerances] 段，文件不存在时返回空字典"""
        path = path or self.tolerance_file
        parser = configparser.ConfigParser()
        parser.optionxform = str
        if not os.path.exists(path):
            if path != Config.USER_CONFIG_FILE:
                raise FileSystemException(
                    f"容差文件不存在: {path}",
                    ErrorCode.FILE_NOT_FOUND,
                    details={'file_path': path}
                )
            return {}
        try:
            parser.read(path, encoding='utf-8')
        except configparser.Error as e:
            raise ConfigException(
                f"容差文件格式错误: {e}",
                ErrorCode.CONFIG_INVALID,
                details={'file_path': path},
                cause=e
            )
        if not parser.has_section('tolerances'):
            raise ConfigException(
                f"容差文件缺少 [tolerances] 段: {path}",
                ErrorCode.CONFIG_MISSING,
                details={'file_path': path}
            )
        return dict(parser.items('tolerances'))

    def apply_tolerances(self, path: Optional[str] = None) -> Dict[str, float]:
        """读取并应用容差覆盖，返回旧值以便恢复"""
        overrides = self.load_tolerances(path)
        if overrides:
            log.info(f"应用容差覆盖: {sorted(overrides)}")
        return Config.apply_overrides(overrides)
