#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
数据导出
CSV（17 位有效数字，'-' 表示标准输出，可附注释行）与 JSON 报告
"""

import io
import json
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from .exceptions import ConfigurationError
from .logging_system import get_structlog_logger

logger = get_structlog_logger(__name__)

FLOAT_FORMAT = '%.17g'


def _open_target(out: str):
    if out == '-':
        return sys.stdout, False
    try:
        return open(out, 'w', encoding='utf-8', newline=''), True
    except OSError as e:
        raise ConfigurationError(f"无法写入输出文件: {e}", config_path=out)


def write_frame(df: pd.DataFrame, out: str = '-', comments: Iterable[str] = ()) -> None:
    """
    写出 CSV；comments 中的每一行原样追加在表格之后（通常以 '#' 开头）。

    Args:
        df: 数据表
        out: 输出路径，'-' 为标准输出
        comments: 追加的注释行
    """
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    for line in comments:
        buffer.write(f"{line}\n")
    stream, owned = _open_target(out)
    try:
        stream.write(buffer.getvalue())
        stream.flush()
    finally:
        if owned:
            stream.close()
    logger.debug("frame_written", rows=len(df), out=out)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(obj: Dict[str, Any], out: str = '-') -> None:
    """写出 JSON：键排序、UTF-8、缩进 2；非有限浮点数写为 null"""
    text = json.dumps(_to_builtin(obj), ensure_ascii=False, indent=2, sort_keys=True)
    stream, owned = _open_target(out)
    try:
        stream.write(text + "\n")
        stream.flush()
    finally:
        if owned:
            stream.close()


def _coordinate_columns(dimension: int) -> List[str]:
    return ['x'] if dimension == 1 else [f"x_{i + 1}" for i in range(dimension)]


def envelope_frame(points: np.ndarray, values: np.ndarray, gradients: Optional[np.ndarray] = None) -> pd.DataFrame:
    """x,value[,grad] 表；二维时坐标列为 x_1,x_2，梯度列为 grad_1,grad_2"""
    dimension = points.shape[1]
    data: Dict[str, Any] = {name: points[:, i] for i, name in enumerate(_coordinate_columns(dimension))}
    data['value'] = np.asarray(values, dtype=float)
    if gradients is not None:
        if dimension == 1:
            data['grad'] = gradients[:, 0]
        else:
            for i in range(dimension):
                data[f"grad_{i + 1}"] = gradients[:, i]
    return pd.DataFrame(data)


def surface_frame(points: np.ndarray, curves: Sequence) -> pd.DataFrame:
    """
    lambda_1..lambda_m,x,value 表。

    Args:
        curves: [(λ 权重元组, 网格上的值)]
    """
    frames = []
    coordinates = _coordinate_columns(points.shape[1])
    for weights, values in curves:
        data: Dict[str, Any] = {f"lambda_{i + 1}": np.full(len(points), w) for i, w in enumerate(weights)}
        for i, name in enumerate(coordinates):
            data[name] = points[:, i]
        data['value'] = np.asarray(values, dtype=float).reshape(-1)
        frames.append(pd.DataFrame(data))
    return pd.concat(frames, ignore_index=True)


def argmin_path_frame(path) -> pd.DataFrame:
    """t,lambda_1..lambda_m,argmin_count,argmin_1..,min_value 表；二维极小点写成 'a;b'"""
    width = max(len(rec.argmin) for rec in path.records)
    rows = []
    for rec in path.records:
        row: Dict[str, Any] = {'t': rec.t}
        for i, w in enumerate(rec.lam):
            row[f"lambda_{i + 1}"] = w
        row['argmin_count'] = len(rec.argmin)
        for j in range(width):
            if j >= len(rec.argmin):
                row[f"argmin_{j + 1}"] = np.nan
            elif rec.argmin.shape[1] == 1:
                row[f"argmin_{j + 1}"] = float(rec.argmin[j, 0])
            else:
                row[f"argmin_{j + 1}"] = ';'.join(FLOAT_FORMAT % v for v in rec.argmin[j])
        row['min_value'] = rec.min_value
        rows.append(row)
    return pd.DataFrame(rows)


def jump_comments(path) -> List[str]:
    """每个跳变一行 '#jump ...' 注释"""
    lines = []
    for jump in path.jumps:
        lam = ','.join(FLOAT_FORMAT % w for w in jump.lam_star)
        left = ';'.join(','.join(FLOAT_FORMAT % v for v in p) for p in jump.left)
        right = ';'.join(','.join(FLOAT_FORMAT % v for v in p) for p in jump.right)
        lines.append(f"#jump t={FLOAT_FORMAT % jump.t_star} lambda={lam} "
                     f"magnitude={FLOAT_FORMAT % jump.magnitude} left={left} right={right}")
    return lines


def curves_frame(columns: Dict[str, np.ndarray]) -> pd.DataFrame:
    """列名到数组的字典转成表（图表数据）"""
    return pd.DataFrame({name: np.asarray(values, dtype=float) for name, values in columns.items()})
