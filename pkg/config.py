#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置文件
包含数值容差、并行度与日志等配置参数
"""

import os
from typing import Dict, Any, Mapping


class Config:
    """应用程序配置类"""

    # 基础配置
    APP_NAME = "harmolat"
    VERSION = "1.0.0"

    # 文件路径
    DATA_DIR = os.path.join(os.path.expanduser("~"), ".harmolat")
    LOG_FILE = os.path.join(DATA_DIR, "harmolat.log")
    USER_CONFIG_FILE = os.path.join(DATA_DIR, "tolerances.ini")

    # 数值容差
    SYMMETRY_TOL = 1e-12
    POSITIVITY_REL_TOL = 1e-10  # λ_min > tol·‖V‖
    COMMUTATOR_TOL = 1e-12
    UNCERTAINTY_TOL = 1e-8
    BOUND_RATIO_TOL = 1e-9
    ASSUMPTION1_REL_TOL = 1e-12
    ORTHOGONALITY_TOL = 1e-10
    RECONSTRUCTION_REL_TOL = 1e-8
    CORRELATION_NOISE_TOL = 1e-12  # |A_ij| ≤ tol·max|A_ii| 视为零

    # 数值参数
    DIMENSION_PRECISION = 1e-3
    THERMAL_EXP_CUTOFF = 700.0
    ELLIPSE_SAMPLES = 4096
    CHEBYSHEV_GRID = 10000
    DECAY_FIT_CUTOFF = 1e-14
    DEFAULT_SEED = 7

    # 并行配置
    THREADS_ENV = "HARMOLAT_THREADS"
    DEFAULT_THREADS = 4

    # 日志配置
    LOG_LEVEL = "DEBUG"
    CONSOLE_LOG_LEVEL = "WARNING"
    LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_MAX_SIZE = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT = 5

    # 可通过 INI 文件覆盖的容差项
    OVERRIDABLE = (
        "SYMMETRY_TOL",
        "POSITIVITY_REL_TOL",
        "COMMUTATOR_TOL",
        "UNCERTAINTY_TOL",
        "BOUND_RATIO_TOL",
        "ASSUMPTION1_REL_TOL",
        "ORTHOGONALITY_TOL",
        "RECONSTRUCTION_REL_TOL",
        "CORRELATION_NOISE_TOL",
        "DIMENSION_PRECISION",
        "THERMAL_EXP_CUTOFF",
        "DECAY_FIT_CUTOFF",
    )

    @classmethod
    def ensure_data_dir(cls):
        """确保数据目录存在"""
        if not os.path.exists(cls.DATA_DIR):
            os.makedirs(cls.DATA_DIR, exist_ok=True)

    @classmethod
    def get_log_file(cls) -> str:
        """获取日志文件路径"""
        cls.ensure_data_dir()
        return cls.LOG_FILE

    @classmethod
    def get_thread_count(cls) -> int:
        """读取 HARMOLAT_THREADS，非法值回退到默认线程数"""
        raw = os.environ.get(cls.THREADS_ENV)
        if raw is None or raw.strip() == "":
            return cls.DEFAULT_THREADS
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value < 1:
            # 延迟导入，避免与 logger 循环依赖
            from logger import warning
            warning(f"{cls.THREADS_ENV}={raw!r} 无效，使用默认值 {cls.DEFAULT_THREADS}")
            return cls.DEFAULT_THREADS
        return value

    @classmethod
    def apply_overrides(cls, overrides: Mapping[str, Any]) -> Dict[str, float]:
        """覆盖容差常量，返回被覆盖前的旧值

        先校验全部键值再赋值，任一项无效时不修改任何常量。
        """
        from exception_handler import ConfigException, ErrorCode

        values: Dict[str, float] = {}
        for raw_key, raw_value in overrides.items():
            key = str(raw_key).upper()
            if key not in cls.OVERRIDABLE:
                raise ConfigException(
                    f"未知的容差项: {raw_key}",
                    ErrorCode.CONFIG_UNKNOWN_KEY,
                    details={'key': raw_key}
                )
            try:
                value = float(raw_value)
            except (TypeError, ValueError) as e:
                raise ConfigException(
                    f"容差项 {raw_key} 不是数值: {raw_value!r}",
                    ErrorCode.CONFIG_INVALID,
                    details={'key': raw_key, 'value': raw_value},
                    cause=e
                )
            if not value > 0:
                raise ConfigException(
                    f"容差项 {raw_key} 必须为正数",
                    ErrorCode.CONFIG_INVALID,
                    details={'key': raw_key, 'value': value}
                )
            values[key] = value

        previous = {key: getattr(cls, key) for key in values}
        for key, value in values.items():
            setattr(cls, key, value)
        return previous

    @classmethod
    def restore(cls, previous: Mapping[str, float]):
        """恢复 apply_overrides 返回的旧值"""
        for key, value in previous.items():
            setattr(cls, key, value)


# 错误消息
ERROR_MESSAGES = {
    "invalid_lattice": "晶格描述无效",
    "invalid_coupling": "耦合矩阵无效",
    "invalid_region": "区域无效",
    "numerical_error": "数值计算失败",
    "bound_not_applicable": "该界不适用于当前实例",
    "verification_failed": "数值验证未通过",
    "file_error": "文件操作失败",
    "config_error": "配置文件无效",
    "unknown_error": "未知错误"
}

# 成功消息
SUCCESS_MESSAGES = {
    "report_written": "报告已写入",
    "verification_passed": "全部验证通过"
}
