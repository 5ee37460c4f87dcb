#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置模块
- 问题定义文件（JSON）：加载、验证、构建 ProxAverageProblem、保存
- 数值设置（YAML）：Settings 数据类及进程级默认值
- 命令行辅助解析：网格覆盖与权重向量
"""

import json
import math
import os
import threading
from dataclasses import dataclass, field, asdict
from typing import Dict, Any, List, Optional, Sequence

import yaml

from .exceptions import (
    ConfigurationError, ConfigurationValidationError, ConfigurationFileNotFoundError,
    DataFormatError, InputError
)
from .logging_system import get_structlog_logger

logger = get_structlog_logger(__name__)


# ---------------------------------------------------------------------------
# 数值设置
# ---------------------------------------------------------------------------

@dataclass
class OracleSettings:
    """网格神谕参数"""
    refine_iters: int = 60
    coordinate_sweeps: int = 6
    max_basins: int = 16
    tie_tol_relative: float = 1e-8
    default_points: int = 2001
    default_points_2d: int = 201
    default_half_width: float = 5.0
    outer_padding: float = 0.25


@dataclass
class PathSettings:
    """极小点路径跟踪参数"""
    jump_threshold_fraction: float = 0.01
    cross_check_fraction: float = 0.1
    cauchy_tol: float = 1e-6


@dataclass
class CheckSettings:
    """正则性检查容差"""
    violation_tolerance: float = 1e-9
    convexity_tolerance: float = 1e-7
    lipschitz_slack: float = 1e-6
    gradient_tolerance: float = 1e-4
    para_prox_r_factor: float = 1.25


@dataclass
class ParallelSettings:
    max_workers: int = 4


@dataclass
class LoggingSettings:
    level: str = "INFO"
    log_dir: Optional[str] = None


@dataclass
class Settings:
    """全部数值设置"""
    oracle: OracleSettings = field(default_factory=OracleSettings)
    paths: PathSettings = field(default_factory=PathSettings)
    checks: CheckSettings = field(default_factory=CheckSettings)
    parallel: ParallelSettings = field(default_factory=ParallelSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Settings":
        """由（已验证的）字典构建，缺省项取默认值"""
        data = data or {}
        return cls(
            oracle=OracleSettings(**data.get('oracle', {})),
            paths=PathSettings(**data.get('paths', {})),
            checks=CheckSettings(**data.get('checks', {})),
            parallel=ParallelSettings(**data.get('parallel', {})),
            logging=LoggingSettings(**data.get('logging', {})),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_SETTINGS_SCHEMA = {
    'oracle': {
        'refine_iters': (int, 1, None),
        'coordinate_sweeps': (int, 1, None),
        'max_basins': (int, 1, None),
        'tie_tol_relative': (float, 0.0, None),
        'default_points': (int, 3, None),
        'default_points_2d': (int, 3, None),
        'default_half_width': (float, 0.0, None),
        'outer_padding': (float, 0.0, None),
    },
    'paths': {
        'jump_threshold_fraction': (float, 0.0, None),
        'cross_check_fraction': (float, 0.0, 1.0),
        'cauchy_tol': (float, 0.0, None),
    },
    'checks': {
        'violation_tolerance': (float, 0.0, None),
        'convexity_tolerance': (float, 0.0, None),
        'lipschitz_slack': (float, 0.0, None),
        'gradient_tolerance': (float, 0.0, None),
        'para_prox_r_factor': (float, 1.0, None),
    },
    'parallel': {
        'max_workers': (int, 1, None),
    },
}


def validate_settings(settings: Dict[str, Any]) -> List[str]:
    """
    验证设置字典。

    Args:
        settings (Dict[str, Any]): 设置字典

    Returns:
        List[str]: 验证错误信息列表，空列表表示无错误
    """
    errors = []

    if not isinstance(settings, dict):
        errors.append("设置文件必须是字典格式")
        return errors

    for section, values in settings.items():
        if section == 'logging':
            if not isinstance(values, dict):
                errors.append("logging: 必须是字典格式")
                continue
            level = values.get('level', 'INFO')
            if str(level).upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
                errors.append(f"logging: 未知的日志级别 '{level}'")
            unknown = set(values) - {'level', 'log_dir'}
            if unknown:
                errors.append(f"logging: 未知字段 {sorted(unknown)}")
            continue

        schema = _SETTINGS_SCHEMA.get(section)
        if schema is None:
            errors.append(f"未知的设置分组 '{section}'")
            continue
        if not isinstance(values, dict):
            errors.append(f"{section}: 必须是字典格式")
            continue

        for key, value in values.items():
            if key not in schema:
                errors.append(f"{section}: 未知字段 '{key}'")
                continue
            kind, lower, upper = schema[key]
            if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
                errors.append(f"{section}.{key}: 必须是整数")
                continue
            if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
                errors.append(f"{section}.{key}: 必须是数值")
                continue
            if not math.isfinite(float(value)):
                errors.append(f"{section}.{key}: 必须是有限数值")
                continue
            if lower is not None and value < lower:
                errors.append(f"{section}.{key}: 不能小于 {lower}")
            if upper is not None and value > upper:
                errors.append(f"{section}.{key}: 不能大于 {upper}")

    return errors


def load_settings(settings_path: Optional[str] = None) -> Settings:
    """
    加载 YAML 设置文件；未给出路径时返回默认设置。

    Raises:
        ConfigurationFileNotFoundError: 文件不存在
        ConfigurationValidationError: 设置验证失败
        ConfigurationError: YAML 格式错误
    """
    if settings_path is None:
        return Settings()

    if not os.path.exists(settings_path):
        raise ConfigurationFileNotFoundError(settings_path)

    try:
        with open(settings_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"解析设置文件 '{settings_path}' 时出错: {e}", config_path=settings_path)

    validation_errors = validate_settings(data)
    if validation_errors:
        error_msg = "设置验证失败:\n" + "\n".join(validation_errors)
        raise ConfigurationValidationError(error_msg, validation_errors, config_path=settings_path)

    logger.info("settings_loaded", path=settings_path)
    return Settings.from_dict(data)


_settings_lock = threading.Lock()
_current_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """进程级设置；调用方省略容差参数时使用"""
    global _current_settings
    with _settings_lock:
        if _current_settings is None:
            _current_settings = Settings()
        return _current_settings


def set_settings(settings: Optional[Settings]) -> None:
    """替换进程级设置；传入 None 恢复默认值"""
    global _current_settings
    with _settings_lock:
        _current_settings = settings


# ---------------------------------------------------------------------------
# 问题定义文件
# ---------------------------------------------------------------------------

def _reject_constant(token: str):
    raise DataFormatError(f"问题文件中不允许出现 {token} 字面量", expected_format="JSON")


def _parse_finite_float(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise DataFormatError(f"问题文件中的数值超出范围: {token}", expected_format="JSON")
    return value


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _validate_vector(value: Any, dimension: Optional[int], label: str) -> List[str]:
    if not isinstance(value, list):
        return [f"{label} 必须是数组"]
    errors = []
    if dimension is not None and len(value) != dimension:
        errors.append(f"{label} 长度应为 {dimension}，实际为 {len(value)}")
    if not all(_is_number(v) for v in value):
        errors.append(f"{label} 必须全部是有限数值")
    return errors


def validate_grid_config(grid: Dict[str, Any], dimension: Optional[int]) -> List[str]:
    """
    验证网格配置。

    Args:
        grid (Dict[str, Any]): {lower, upper, points}
        dimension (Optional[int]): 问题维度

    Returns:
        List[str]: 验证错误信息列表
    """
    if not isinstance(grid, dict):
        return ["grid 必须是对象"]
    errors = []
    for key in ('lower', 'upper', 'points'):
        if key not in grid:
            errors.append(f"grid 缺少 '{key}' 字段")
    if errors:
        return errors
    errors.extend(_validate_vector(grid['lower'], dimension, "grid.lower"))
    errors.extend(_validate_vector(grid['upper'], dimension, "grid.upper"))
    points = grid['points']
    if not isinstance(points, list) or not all(isinstance(p, int) and not isinstance(p, bool) for p in points):
        errors.append("grid.points 必须是整数数组")
    elif dimension is not None and len(points) != dimension:
        errors.append(f"grid.points 长度应为 {dimension}")
    elif any(p < 2 for p in points):
        errors.append("grid.points 每一维至少需要 2 个点")
    if not errors:
        for i, (lo, hi) in enumerate(zip(grid['lower'], grid['upper'])):
            if not lo < hi:
                errors.append(f"grid 第 {i + 1} 维下界必须小于上界")
    return errors


def validate_delta_config(delta: Any, m: Optional[int]) -> List[str]:
    """
    验证 δ(λ) 配置；自定义多项式另由 DeltaSpec.validate 做顶点/内点采样检查。
    """
    if not isinstance(delta, dict):
        return ["delta 必须是对象"]
    kind = delta.get('kind')
    if kind == 'symmetric_quadratic':
        return []
    if kind != 'custom_polynomial':
        return [f"delta.kind 未知: {kind!r}"]
    terms = delta.get('terms')
    if not isinstance(terms, list) or not terms:
        return ["custom_polynomial 需要非空的 terms 数组"]
    errors = []
    for i, term in enumerate(terms):
        if not isinstance(term, dict) or 'powers' not in term or 'coef' not in term:
            errors.append(f"delta.terms[{i}] 需要 powers 和 coef 字段")
            continue
        powers = term['powers']
        if not isinstance(powers, list) or not all(
                isinstance(p, int) and not isinstance(p, bool) and p >= 0 for p in powers):
            errors.append(f"delta.terms[{i}].powers 必须是非负整数数组")
        elif m is not None and len(powers) != m:
            errors.append(f"delta.terms[{i}].powers 长度应为函数个数 {m}")
        if not _is_number(term['coef']):
            errors.append(f"delta.terms[{i}].coef 必须是有限数值")
    return errors


def validate_function_config(function: Any, dimension: Optional[int], index: int) -> List[str]:
    """验证单个 max-of-quadratics 函数定义"""
    label = f"functions[{index}]"
    if not isinstance(function, dict):
        return [f"{label} 必须是对象"]
    errors = []
    pieces = function.get('pieces')
    if not isinstance(pieces, list) or not pieces:
        errors.append(f"{label}.pieces 必须是非空数组")
    else:
        for j, piece in enumerate(pieces):
            plabel = f"{label}.pieces[{j}]"
            if not isinstance(piece, dict):
                errors.append(f"{plabel} 必须是对象")
                continue
            for key in ('alpha', 'beta', 'gamma'):
                if key not in piece:
                    errors.append(f"{plabel} 缺少 '{key}' 字段")
            if 'alpha' in piece and not _is_number(piece['alpha']):
                errors.append(f"{plabel}.alpha 必须是有限数值")
            if 'gamma' in piece and not _is_number(piece['gamma']):
                errors.append(f"{plabel}.gamma 必须是有限数值")
            if 'beta' in piece:
                errors.extend(_validate_vector(piece['beta'], dimension, f"{plabel}.beta"))
    domain = function.get('domain')
    if domain is not None:
        if not isinstance(domain, dict) or 'lower' not in domain or 'upper' not in domain:
            errors.append(f"{label}.domain 需要 lower 和 upper 字段")
        else:
            box_errors = (_validate_vector(domain['lower'], dimension, f"{label}.domain.lower")
                          + _validate_vector(domain['upper'], dimension, f"{label}.domain.upper"))
            errors.extend(box_errors)
            if not box_errors:
                for lo, hi in zip(domain['lower'], domain['upper']):
                    if lo > hi:
                        errors.append(f"{label}.domain 下界不能大于上界")
                        break
    return errors


def validate_problem_config(config: Dict[str, Any]) -> List[str]:
    """
    验证整个问题定义。

    Args:
        config (Dict[str, Any]): 问题定义字典

    Returns:
        List[str]: 验证错误信息列表，空列表表示无错误
    """
    errors = []

    if not isinstance(config, dict):
        errors.append("问题文件顶层必须是对象")
        return errors

    dimension = config.get('dimension')
    if not isinstance(dimension, int) or isinstance(dimension, bool) or dimension < 1:
        errors.append("dimension 必须是正整数")
        dimension = None
    elif dimension > 2:
        errors.append("dimension 不能超过 2")

    functions = config.get('functions')
    if not isinstance(functions, list) or not functions:
        errors.append("functions 必须是非空数组")
        functions = []
    for i, function in enumerate(functions):
        errors.extend(validate_function_config(function, dimension, i))

    if 'r' not in config:
        errors.append("缺少 'r' 字段")
    elif not _is_number(config['r']) or config['r'] <= 0:
        errors.append("r 必须是正的有限数值")

    if 'delta' in config:
        errors.extend(validate_delta_config(config['delta'], len(functions) or None))

    if 'grid' in config:
        errors.extend(validate_grid_config(config['grid'], dimension))

    return errors


def load_problem_config(config_path: str) -> Dict[str, Any]:
    """
    加载并验证问题定义文件（JSON, UTF-8）。

    Raises:
        ConfigurationFileNotFoundError: 文件不存在
        DataFormatError: JSON 非法或包含 NaN/Infinity
        ConfigurationValidationError: 内容验证失败
    """
    if not os.path.exists(config_path):
        raise ConfigurationFileNotFoundError(config_path)

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            config = json.load(f, parse_constant=_reject_constant, parse_float=_parse_finite_float)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"解析问题文件 '{config_path}' 时出错: {e}", expected_format="JSON",
                              config_path=config_path)
    except UnicodeDecodeError as e:
        raise DataFormatError(f"问题文件 '{config_path}' 不是 UTF-8 编码: {e}", config_path=config_path)

    validation_errors = validate_problem_config(config)
    if validation_errors:
        error_msg = "问题文件验证失败:\n" + "\n".join(validation_errors)
        raise ConfigurationValidationError(error_msg, validation_errors, config_path=config_path)

    return config


def build_problem(config: Dict[str, Any], r: Optional[float] = None,
                  grid: Optional[Sequence] = None, check_thresholds: bool = True):
    """
    由问题定义构建 ProxAverageProblem；命令行参数覆盖文件中的值。

    Args:
        config: 已验证的问题定义
        r: 覆盖文件中的 r
        grid: 覆盖网格，GridSpec 或 (lower, upper, points) 三元组列表
        check_thresholds: 是否要求 r 高于每个函数的阈值

    Returns:
        ProxAverageProblem
    """
    from .funcspace import DomainBox, GridSpec, MaxQuadFunction, QuadraticPiece
    from .proxavg import DeltaSpec, ProxAverageProblem

    dimension = config['dimension']
    functions = []
    for function in config['functions']:
        pieces = [QuadraticPiece(p['alpha'], tuple(p['beta']), p['gamma']) for p in function['pieces']]
        domain = function.get('domain')
        box = DomainBox(tuple(domain['lower']), tuple(domain['upper'])) if domain else None
        functions.append(MaxQuadFunction(dimension, tuple(pieces), box))

    delta = DeltaSpec.from_dict(config.get('delta', {'kind': 'symmetric_quadratic'}))
    delta_errors = delta.validate(len(functions))
    if delta_errors:
        raise ConfigurationValidationError("delta 验证失败:\n" + "\n".join(delta_errors), delta_errors)

    inner_grid = None
    if grid is not None:
        inner_grid = grid if isinstance(grid, GridSpec) else GridSpec.from_axes(grid)
        if inner_grid.dimension != dimension:
            raise ConfigurationError(f"--grid 需要 {dimension} 个维度，实际为 {inner_grid.dimension}")
    elif 'grid' in config:
        inner_grid = GridSpec.from_dict(config['grid'])

    r_value = float(config['r'] if r is None else r)
    if not math.isfinite(r_value) or r_value <= 0:
        raise InputError(f"r 必须是正的有限数值: {r_value}", parameter="r")

    return ProxAverageProblem.create(functions, r_value, delta=delta, inner_grid=inner_grid,
                                     check_thresholds=check_thresholds)


def load_problem(config_path: str, r: Optional[float] = None, grid: Optional[Sequence] = None,
                 check_thresholds: bool = True):
    """加载问题文件并构建问题对象"""
    config = load_problem_config(config_path)
    problem = build_problem(config, r=r, grid=grid, check_thresholds=check_thresholds)
    logger.info("problem_loaded", path=config_path, m=problem.m, dimension=problem.dimension, r=problem.r)
    return problem


def save_problem_config(config: Dict[str, Any], config_path: str) -> None:
    """
    保存问题定义到 JSON 文件。

    Raises:
        ConfigurationValidationError: 内容验证失败
        ConfigurationError: 写入失败
    """
    validation_errors = validate_problem_config(config)
    if validation_errors:
        raise ConfigurationValidationError("问题定义验证失败:\n" + "\n".join(validation_errors),
                                           validation_errors)
    try:
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump(config, f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
    except OSError as e:
        raise ConfigurationError(f"保存问题文件失败: {e}", config_path=config_path)


# ---------------------------------------------------------------------------
# 命令行辅助解析
# ---------------------------------------------------------------------------

def parse_grid_override(text: str):
    """
    解析 'lo:hi:n' 形式的单维网格覆盖。

    Returns:
        (lower, upper, points) 三元组
    """
    parts = text.split(':')
    if len(parts) != 3:
        raise ConfigurationError(f"网格格式应为 lo:hi:n，实际为 '{text}'")
    try:
        lower, upper, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigurationError(f"无法解析网格 '{text}'")
    if not (math.isfinite(lower) and math.isfinite(upper)) or not lower < upper:
        raise ConfigurationError(f"网格下界必须小于上界: '{text}'")
    if points < 2:
        raise ConfigurationError(f"网格至少需要 2 个点: '{text}'")
    return lower, upper, points


def parse_lambda(text: str) -> List[float]:
    """解析 'w1,w2,...' 形式的权重向量（单纯形检查由 SimplexWeight 负责）"""
    try:
        weights = [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ConfigurationError(f"无法解析权重 '{text}'")
    if not weights:
        raise ConfigurationError("权重向量不能为空")
    return weights
