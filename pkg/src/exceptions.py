#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
NC近端平均工具包 自定义异常类
定义项目中使用的各种异常类型；exit_code 供命令行入口映射退出码
"""

import functools
from typing import Optional, Dict, Any


class ProxAverageError(Exception):
    """工具包异常基类"""

    exit_code = 1

    def __init__(self, message: str, error_code: Optional[str] = None, **kwargs):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = kwargs

    def __str__(self):
        if self.error_code:
            return f"[{self.error_code}] {self.message}"
        return self.message


# ---------------------------------------------------------------------------
# 输入 / 配置错误（退出码 2）
# ---------------------------------------------------------------------------

class ConfigurationError(ProxAverageError):
    """配置相关错误"""

    exit_code = 2

    def __init__(self, message: str, config_path: Optional[str] = None,
                 error_code: str = "CONFIG_ERROR", **kwargs):
        super().__init__(message, error_code=error_code, **kwargs)
        self.config_path = config_path


class ConfigurationValidationError(ConfigurationError):
    """配置验证错误"""

    def __init__(self, message: str, validation_errors: Optional[list] = None, **kwargs):
        super().__init__(message, error_code="CONFIG_VALIDATION_ERROR", **kwargs)
        self.validation_errors = validation_errors or []


class ConfigurationFileNotFoundError(ConfigurationError):
    """配置文件未找到错误"""

    def __init__(self, config_path: str, **kwargs):
        message = f"配置文件未找到: {config_path}"
        super().__init__(message, config_path=config_path,
                         error_code="CONFIG_FILE_NOT_FOUND", **kwargs)


class DataFormatError(ConfigurationError):
    """问题文件格式错误（非法 JSON、NaN/Inf 字面量等）"""

    def __init__(self, message: str, expected_format: Optional[str] = None, **kwargs):
        super().__init__(message, error_code="DATA_FORMAT_ERROR", **kwargs)
        self.expected_format = expected_format


class InputError(ProxAverageError):
    """调用参数错误"""

    exit_code = 2

    def __init__(self, message: str, parameter: Optional[str] = None,
                 error_code: str = "INPUT_ERROR", **kwargs):
        super().__init__(message, error_code=error_code, **kwargs)
        self.parameter = parameter


class DimensionMismatchError(InputError):
    """维度不匹配"""

    def __init__(self, message: str, expected: Optional[int] = None,
                 actual: Optional[int] = None, **kwargs):
        super().__init__(message, error_code="DIMENSION_MISMATCH", **kwargs)
        self.expected = expected
        self.actual = actual


class SimplexError(InputError):
    """权重不在单位单纯形上"""

    def __init__(self, message: str, weights: Optional[tuple] = None, **kwargs):
        super().__init__(message, parameter="lambda", error_code="SIMPLEX_ERROR", **kwargs)
        self.weights = weights


class ConvergenceInputError(InputError):
    """输入序列不收敛"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="NON_CONVERGENT_SEQUENCE", **kwargs)


# ---------------------------------------------------------------------------
# 数值错误（退出码 1）
# ---------------------------------------------------------------------------

class NumericalError(ProxAverageError):
    """数值计算相关错误"""

    exit_code = 1

    def __init__(self, message: str, error_code: str = "NUMERICAL_ERROR", **kwargs):
        super().__init__(message, error_code=error_code, **kwargs)


class ProxParameterError(NumericalError):
    """近端参数不满足要求"""

    def __init__(self, message: str, r: Optional[float] = None,
                 bound: Optional[float] = None, **kwargs):
        super().__init__(message, error_code="PROX_PARAMETER_ERROR", **kwargs)
        self.r = r
        self.bound = bound


class GridTooSmallError(NumericalError):
    """网格扩张一次后最优点仍在边界上"""

    def __init__(self, message: str = "grid too small", extent: Optional[float] = None, **kwargs):
        super().__init__(message, error_code="GRID_TOO_SMALL", **kwargs)
        self.extent = extent


class ImproperFunctionError(NumericalError):
    """目标函数在网格上处处非有限"""

    def __init__(self, message: str = "improper on grid", **kwargs):
        super().__init__(message, error_code="IMPROPER_ON_GRID", **kwargs)


class MultivaluedProxError(NumericalError):
    """近端映射多值，梯度无定义"""

    def __init__(self, message: str = "gradient undefined here", minimizers: Optional[list] = None,
                 **kwargs):
        super().__init__(message, error_code="MULTIVALUED_PROX", **kwargs)
        self.minimizers = minimizers or []


class CheckFailedError(NumericalError):
    """验证断言失败"""

    def __init__(self, message: str, check_name: Optional[str] = None, **kwargs):
        super().__init__(message, error_code="CHECK_FAILED", **kwargs)
        self.check_name = check_name


def handle_exception(func):
    """异常处理装饰器"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ProxAverageError:
            # 已知的业务异常，直接抛出
            raise
        except FileNotFoundError as e:
            raise ConfigurationFileNotFoundError(str(e.filename or e))
        except ArithmeticError as e:
            raise NumericalError(f"浮点运算错误: {str(e)}")
        except ValueError as e:
            # numpy / scipy 在计算途中抛出的 ValueError（含 LinAlgError）
            raise NumericalError(f"数值计算错误: {str(e)}")
        except Exception as e:
            # 未预期的异常，包装为通用异常
            raise ProxAverageError(f"未预期的错误: {str(e)}", error_code="UNEXPECTED_ERROR")

    return wrapper


def log_and_raise(logger, exception: ProxAverageError, level: str = "error"):
    """记录日志并抛出异常"""

    log_method = getattr(logger, level.lower(), logger.error)

    log_message: Dict[str, Any] = {
        "error_code": exception.error_code,
        "error_message": exception.message,
        "details": exception.details,
    }

    # 添加特定异常类型的额外信息
    if hasattr(exception, 'config_path'):
        log_message["config_path"] = exception.config_path
    if hasattr(exception, 'parameter'):
        log_message["parameter"] = exception.parameter
    if hasattr(exception, 'check_name'):
        log_message["check_name"] = exception.check_name

    log_method("exception_raised", **log_message)
    raise exception
