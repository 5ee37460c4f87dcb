#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结构化日志模块
数值模块通过 structlog 以 "事件名 + 键值上下文" 的形式记录（网格大小、r、λ、计数等）。
控制台只写 stderr，标准输出留给 CSV/JSON；设置 log_dir 时另写轮转的 JSON 行日志。
"""

import sys
import json
import time
import logging
import logging.handlers
import threading
import traceback
from contextlib import contextmanager
from datetime import datetime, timezone
from enum import Enum
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import structlog

from .exceptions import ConfigurationError


class LogLevel(Enum):
    """日志级别枚举"""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"

    @classmethod
    def from_name(cls, name: str) -> "LogLevel":
        try:
            return cls(str(name).upper())
        except ValueError:
            raise ConfigurationError(f"未知的日志级别: {name}")

    @property
    def numeric(self) -> int:
        return getattr(logging, self.value)


def _json_default(value: Any):
    """numpy 标量与数组、元组权重等转成 JSON 可写的值"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, ensure_ascii=False, default=_json_default, sort_keys=True)


# 通过 logging 的 extra={'context': {...}} 传入的键值上下文
CONTEXT_ATTR = 'context'
PERFORMANCE_ATTR = 'performance'

_HEADER_FIELDS = ('timestamp', 'level', 'logger', 'thread', 'where')


class LogFormatter:
    """
    记录 -> 字典 的转换，以及 structlog 事件的最终渲染。

    Args:
        fields: 要包含的头部字段，取自 timestamp / level / logger / thread / where
    """

    def __init__(self, fields: Sequence[str] = ('timestamp', 'level', 'logger')):
        unknown = set(fields) - set(_HEADER_FIELDS)
        if unknown:
            raise ConfigurationError(f"未知的日志字段: {sorted(unknown)}")
        self.fields = tuple(fields)

    def render_structlog(self, logger, method_name, event_dict) -> str:
        """事件名在前，其余键值按 JSON 附在后面；级别与时间戳由 logging 处理器负责"""
        event = str(event_dict.pop('event', ''))
        for key in ('timestamp', 'level', 'logger'):
            event_dict.pop(key, None)
        if 'thread' in self.fields:
            event_dict['thread'] = threading.current_thread().name
        if not event_dict:
            return event
        return f"{event} {_dumps(event_dict)}"

    def to_dict(self, record: logging.LogRecord) -> Dict[str, Any]:
        entry: Dict[str, Any] = {}
        if 'timestamp' in self.fields:
            stamp = datetime.fromtimestamp(record.created, tz=timezone.utc)
            entry['timestamp'] = stamp.isoformat(timespec='milliseconds').replace('+00:00', 'Z')
        if 'level' in self.fields:
            entry['level'] = record.levelname
        if 'logger' in self.fields:
            entry['logger'] = record.name
        if 'thread' in self.fields:
            entry['thread'] = record.threadName
        if 'where' in self.fields:
            entry['where'] = f"{record.funcName}:{record.lineno}"
        entry['message'] = record.getMessage()
        entry.update(getattr(record, CONTEXT_ATTR, None) or {})
        if record.exc_info:
            exc_type, exc, tb = record.exc_info
            entry['exception'] = {'type': exc_type.__name__, 'message': str(exc),
                                  'traceback': traceback.format_exception(exc_type, exc, tb)}
        return entry


class JSONFormatter(logging.Formatter):
    """文件日志：每行一个 JSON 对象"""

    def __init__(self, formatter: LogFormatter):
        super().__init__()
        self.formatter = formatter

    def format(self, record: logging.LogRecord) -> str:
        return _dumps(self.formatter.to_dict(record))


class ConsoleFormatter(logging.Formatter):
    """stderr 上的单行格式：时间 [级别] 日志器: 消息 {上下文}；终端下级别着色"""

    LEVEL_COLORS = {'DEBUG': 36, 'INFO': 32, 'WARNING': 33, 'ERROR': 31, 'CRITICAL': 35}

    def __init__(self, formatter: LogFormatter, use_color: Optional[bool] = None):
        super().__init__()
        self.formatter = formatter
        self.use_color = sys.stderr.isatty() if use_color is None else use_color

    def _level(self, name: str) -> str:
        code = self.LEVEL_COLORS.get(name)
        if self.use_color and code is not None:
            return f"\033[{code}m[{name}]\033[0m"
        return f"[{name}]"

    def format(self, record: logging.LogRecord) -> str:
        entry = self.formatter.to_dict(record)
        head: List[str] = []
        if 'timestamp' in entry:
            head.append(entry.pop('timestamp')[11:23])
        if 'level' in entry:
            head.append(self._level(entry.pop('level')))
        if 'logger' in entry:
            head.append(f"{entry.pop('logger')}:")
        for key in ('thread', 'where'):
            if key in entry:
                head.append(str(entry.pop(key)))
        head.append(entry.pop('message'))
        exception = entry.pop('exception', None)
        if entry:
            head.append(_dumps(entry))
        line = ' '.join(head)
        if exception is not None:
            line += '\n' + ''.join(exception['traceback']).rstrip()
        return line


class PerformanceFilter(logging.Filter):
    """只放行带性能标记的记录"""

    def filter(self, record: logging.LogRecord) -> bool:
        return bool(getattr(record, PERFORMANCE_ATTR, False))


def _performance_extra(operation: str, duration: float, success: bool) -> Dict[str, Any]:
    return {PERFORMANCE_ATTR: True,
            CONTEXT_ATTR: {'operation': operation, 'duration': duration, 'success': success}}


class LogManager:
    """
    日志管理器：配置 structlog 与根日志器。

    文件日志（仅当给出 log_dir）：
      proxavg.log      跟随当前级别
      error.log        ERROR 及以上
      performance.log  只含性能记录
    """

    # (文件名, 固定级别或 None 表示跟随当前级别, 是否只收性能记录)
    FILE_LOGS = (
        ("proxavg.log", None, False),
        ("error.log", logging.ERROR, False),
        ("performance.log", logging.INFO, True),
    )

    def __init__(self, log_dir: Optional[str] = None, max_file_size: int = 10 * 1024 * 1024,
                 backup_count: int = 5, log_level: LogLevel = LogLevel.INFO,
                 enable_structlog: bool = True):
        self.log_dir = Path(log_dir) if log_dir else None
        self.max_file_size = max_file_size
        self.backup_count = backup_count
        self.log_level = log_level
        self.enable_structlog = enable_structlog
        self.formatter = LogFormatter()
        self.stats = {'operations': 0, 'failed_operations': 0}
        # 随 set_log_level 调整级别的处理器
        self._level_handlers: List[logging.Handler] = []

        if enable_structlog:
            self._configure_structlog()
        self._configure_root()

    def _configure_structlog(self) -> None:
        structlog.configure(
            processors=[
                structlog.stdlib.filter_by_level,
                structlog.stdlib.add_logger_name,
                structlog.stdlib.add_log_level,
                structlog.stdlib.PositionalArgumentsFormatter(),
                structlog.processors.StackInfoRenderer(),
                structlog.processors.format_exc_info,
                self.formatter.render_structlog,
            ],
            context_class=dict,
            logger_factory=structlog.stdlib.LoggerFactory(),
            wrapper_class=structlog.stdlib.BoundLogger,
            cache_logger_on_first_use=False,
        )

    def _configure_root(self) -> None:
        root = logging.getLogger()
        root.setLevel(self.log_level.numeric)
        for handler in list(root.handlers):
            root.removeHandler(handler)
            handler.close()

        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(ConsoleFormatter(self.formatter))
        self._attach(root, console, None)

        if self.log_dir is None:
            return
        try:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            for filename, level, performance_only in self.FILE_LOGS:
                handler = logging.handlers.RotatingFileHandler(
                    self.log_dir / filename, maxBytes=self.max_file_size,
                    backupCount=self.backup_count, encoding='utf-8')
                handler.setFormatter(JSONFormatter(self.formatter))
                if performance_only:
                    handler.addFilter(PerformanceFilter())
                self._attach(root, handler, level)
        except OSError as e:
            raise ConfigurationError(f"日志目录不可用: {e}", config_path=str(self.log_dir))

    def _attach(self, root: logging.Logger, handler: logging.Handler, fixed_level: Optional[int]) -> None:
        if fixed_level is None:
            handler.setLevel(self.log_level.numeric)
            self._level_handlers.append(handler)
        else:
            handler.setLevel(fixed_level)
        root.addHandler(handler)

    def get_logger(self, name: str) -> logging.Logger:
        return logging.getLogger(name)

    def get_structlog_logger(self, name: str):
        if not self.enable_structlog:
            return self.get_logger(name)
        return structlog.get_logger(name)

    def set_log_level(self, level: LogLevel) -> None:
        """修改根日志器及跟随级别的处理器；error.log 与 performance.log 不受影响"""
        self.log_level = level
        logging.getLogger().setLevel(level.numeric)
        for handler in self._level_handlers:
            handler.setLevel(level.numeric)

    def log_performance(self, operation: str, duration: float, success: bool = True) -> None:
        self.get_logger('performance').info(
            f"{operation} 耗时 {duration:.3f}秒", extra=_performance_extra(operation, duration, success))

    def get_stats(self) -> Dict[str, Any]:
        return dict(self.stats)

    @contextmanager
    def log_operation(self, operation_name: str, logger_name: str = 'proxavg'):
        """计时一个操作；失败时计数并记录警告后重新抛出"""
        logger = self.get_logger(logger_name)
        self.stats['operations'] += 1
        start = time.perf_counter()
        try:
            yield logger
        except Exception as e:
            duration = time.perf_counter() - start
            self.stats['failed_operations'] += 1
            logger.warning(f"操作失败: {operation_name} ({type(e).__name__})",
                           extra={CONTEXT_ATTR: {'operation': operation_name, 'duration': duration}})
            self.log_performance(operation_name, duration, success=False)
            raise
        self.log_performance(operation_name, time.perf_counter() - start)


def performance_logger(operation_name: str):
    """
    装饰器：在 DEBUG 级别把被包装调用的耗时与成败写入 performance 日志器。
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = logging.getLogger('performance')
            start = time.perf_counter()
            success = False
            try:
                result = func(*args, **kwargs)
                success = True
                return result
            finally:
                duration = time.perf_counter() - start
                logger.debug(f"{operation_name} {'完成' if success else '失败'}，耗时 {duration:.3f}秒",
                             extra=_performance_extra(operation_name, duration, success))
        return wrapper
    return decorator


_default_log_manager: Optional[LogManager] = None


def get_default_log_manager() -> LogManager:
    """库被直接导入时默认只输出警告及以上"""
    global _default_log_manager
    if _default_log_manager is None:
        _default_log_manager = LogManager(log_level=LogLevel.WARNING)
    return _default_log_manager


def setup_logging(level: str = "INFO", log_dir: Optional[str] = None) -> LogManager:
    """按给定级别重新初始化全局日志管理器（命令行入口调用）"""
    global _default_log_manager
    _default_log_manager = LogManager(log_dir=log_dir, log_level=LogLevel.from_name(level))
    return _default_log_manager


def get_logger(name: str) -> logging.Logger:
    return get_default_log_manager().get_logger(name)


def get_structlog_logger(name: str):
    return get_default_log_manager().get_structlog_logger(name)
