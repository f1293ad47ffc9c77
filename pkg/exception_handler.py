#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常处理和错误管理模块
定义错误代码、异常层次以及命令行退出码的映射
"""

import json
import sys
import threading
import traceback
from typing import Optional, Callable, Dict, Any, List

import numpy as np

from logger import logger


class ErrorCode:
    """错误代码定义"""
    # 晶格相关错误
    LATTICE_INVALID_DESCRIPTOR = "LAT_001"
    LATTICE_VERTEX_OUT_OF_RANGE = "LAT_002"
    LATTICE_DISCONNECTED = "LAT_003"
    LATTICE_INVALID_REGION = "LAT_004"
    LATTICE_INVALID_PARAMETER = "LAT_005"

    # 耦合相关错误
    COUPLING_DIMENSION_MISMATCH = "CPL_001"
    COUPLING_NOT_SYMMETRIC = "CPL_002"
    COUPLING_NOT_POSITIVE = "CPL_003"
    COUPLING_INVALID_PARAMETER = "CPL_004"
    COUPLING_RANGE_VIOLATION = "CPL_005"
    COUPLING_NON_LOCAL = "CPL_006"

    # 谱计算相关错误
    SPECTRAL_NOT_SYMMETRIC = "SPC_001"
    SPECTRAL_NO_CONVERGENCE = "SPC_002"
    SPECTRAL_FUNCTION_UNDEFINED = "SPC_003"
    SPECTRAL_INVARIANT_BROKEN = "SPC_004"

    # 高斯态相关错误
    STATE_INVALID_TEMPERATURE = "GSS_001"
    STATE_UNCERTAINTY_VIOLATED = "GSS_002"
    STATE_INDEX_OUT_OF_RANGE = "GSS_003"
    STATE_INSUFFICIENT_DATA = "GSS_004"
    STATE_INVALID_METHOD = "GSS_005"
    STATE_INVALID_FORMAT = "GSS_006"

    # 界相关错误
    BOUND_DOMAIN_ERROR = "BND_001"
    BOUND_NOT_APPLICABLE = "BND_002"
    BOUND_DIMENSION_MISMATCH = "BND_003"
    BOUND_NOT_ANALYTIC = "BND_004"

    # 文件系统错误
    FILE_NOT_FOUND = "FILE_001"
    FILE_PERMISSION_ERROR = "FILE_002"
    FILE_CORRUPTED = "FILE_003"

    # 配置错误
    CONFIG_INVALID = "CFG_001"
    CONFIG_MISSING = "CFG_002"
    CONFIG_UNKNOWN_KEY = "CFG_003"

    # 验证失败
    CHECK_FAILED = "CHK_001"

    # 未知错误
    UNKNOWN_ERROR = "UNK_001"


class HarmolatException(Exception):
    """应用程序基础异常类"""

    def __init__(self, message: str, error_code: str = ErrorCode.UNKNOWN_ERROR,
                 details: Optional[Dict[str, Any]] = None, cause: Optional[Exception] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.cause = cause

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            'message': self.message,
            'error_code': self.error_code,
            'details': self.details,
            'cause': str(self.cause) if self.cause else None
        }

    def __str__(self) -> str:
        return f"[{self.error_code}] {self.message}"


class LatticeException(HarmolatException):
    """晶格相关异常"""
    pass


class CouplingException(HarmolatException):
    """耦合相关异常"""
    pass


class SpectralException(HarmolatException):
    """谱计算异常"""
    pass


class StateException(HarmolatException):
    """高斯态异常"""
    pass


class BoundException(HarmolatException):
    """界计算异常"""
    pass


class FileSystemException(HarmolatException):
    """文件系统异常"""
    pass


class ConfigException(HarmolatException):
    """配置异常"""
    pass


class VerificationException(HarmolatException):
    """数值验证未通过"""
    pass


# 命令行退出码
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def exit_code_for(exception: Exception) -> int:
    """异常到退出码的映射"""
    if isinstance(exception, VerificationException):
        return EXIT_CHECK_FAILED
    if isinstance(exception, (SpectralException, StateException)):
        if exception.error_code in (ErrorCode.STATE_INVALID_TEMPERATURE, ErrorCode.STATE_INVALID_FORMAT):
            return EXIT_INPUT_ERROR
        return EXIT_NUMERICAL_ERROR
    if isinstance(exception, HarmolatException) and exception.error_code == ErrorCode.UNKNOWN_ERROR:
        return EXIT_NUMERICAL_ERROR
    return EXIT_INPUT_ERROR


class ExceptionHandler:
    """异常处理器"""

    def __init__(self):
        self.error_counts: Dict[str, int] = {}
        self.error_callbacks: List[Callable] = []
        self.lock = threading.Lock()

    def install_global_hook(self):
        """设置全局异常处理"""
        def handle_exception(exc_type, exc_value, exc_traceback):
            if issubclass(exc_type, KeyboardInterrupt):
                sys.__excepthook__(exc_type, exc_value, exc_traceback)
                return

            error_msg = ''.join(traceback.format_exception(exc_type, exc_value, exc_traceback))
            logger.critical(f"未捕获的异常: {error_msg}")

        sys.excepthook = handle_exception

    def register_error_callback(self, callback: Callable):
        """注册错误回调"""
        self.error_callbacks.append(callback)

    def handle_exception(self, exception: Exception, context: str = "") -> int:
        """处理异常，返回命令行退出码"""
        app_exception = exception_to_app_exception(exception)
        with self.lock:
            self._log_exception(app_exception, context)

            self.error_counts[app_exception.error_code] = \
                self.error_counts.get(app_exception.error_code, 0) + 1

            for callback in self.error_callbacks:
                try:
                    callback(app_exception, context)
                except Exception as e:
                    logger.error(f"错误回调失败: {e}")

        return exit_code_for(app_exception)

    def _log_exception(self, exception: HarmolatException, context: str):
        """记录异常"""
        logger.error(f"应用异常 [{context}]: {exception}")
        if exception.details:
            logger.error(f"异常详情: {exception.details}")
        if exception.cause is not None and not isinstance(exception.cause, HarmolatException):
            logger.debug("原始异常堆栈:\n" + ''.join(
                traceback.format_exception(type(exception.cause), exception.cause,
                                           exception.cause.__traceback__)))

    def get_error_statistics(self) -> Dict[str, int]:
        """获取错误统计"""
        with self.lock:
            return self.error_counts.copy()

    def reset_error_counts(self):
        """重置错误计数"""
        with self.lock:
            self.error_counts.clear()


def safe_execute(func: Callable, *args, default_return=None,
                 exception_handler: Optional[ExceptionHandler] = None,
                 context: str = "", **kwargs):
    """安全执行函数，失败时记录原因并返回默认值"""
    try:
        return func(*args, **kwargs)
    except Exception as e:
        if exception_handler:
            exception_handler.handle_exception(e, context)
        else:
            logger.warning(f"安全执行失败 [{context}]: {e}")
        return default_return


def exception_to_app_exception(exception: Exception) -> HarmolatException:
    """将标准异常转换为应用异常"""
    if isinstance(exception, HarmolatException):
        return exception

    if isinstance(exception, FileNotFoundError):
        return FileSystemException(
            f"文件未找到: {exception}",
            ErrorCode.FILE_NOT_FOUND,
            details={'file_path': str(exception.filename) if exception.filename else None},
            cause=exception
        )

    if isinstance(exception, PermissionError):
        return FileSystemException(
            f"文件权限错误: {exception}",
            ErrorCode.FILE_PERMISSION_ERROR,
            cause=exception
        )

    # JSONDecodeError 是 ValueError 的子类，需先判断
    if isinstance(exception, json.JSONDecodeError):
        return FileSystemException(
            f"文件内容损坏: {exception}",
            ErrorCode.FILE_CORRUPTED,
            cause=exception
        )

    if isinstance(exception, np.linalg.LinAlgError):
        return SpectralException(
            f"线性代数计算失败: {exception}",
            ErrorCode.SPECTRAL_NO_CONVERGENCE,
            cause=exception
        )

    if isinstance(exception, (KeyError, ValueError, TypeError)):
        return ConfigException(
            f"输入数据无效: {exception}",
            ErrorCode.CONFIG_INVALID,
            cause=exception
        )

    if isinstance(exception, MemoryError):
        return SpectralException(
            f"内存不足: {exception}",
            ErrorCode.UNKNOWN_ERROR,
            cause=exception
        )

    return HarmolatException(
        f"未知错误: {exception}",
        ErrorCode.UNKNOWN_ERROR,
        cause=exception
    )
