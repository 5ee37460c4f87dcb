#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
网格神谕
在网格上暴力求最小值：找出所有局部盆地，逐盆地做黄金分割（一维）
或坐标下降（二维）细化，保留与最优值相差不超过并列容差的全部极小点。
多个目标（例如不同 x̄ 的近端子问题）按行批量处理。
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .exceptions import GridTooSmallError, ImproperFunctionError
from .funcspace import GridSpec
from .logging_system import get_structlog_logger

logger = get_structlog_logger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

# objective(points (K, n), rows (K,)) -> values (K,)
RowObjective = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class GridMinimum:
    """单个目标的最小值与全部并列极小点"""

    value: float
    points: np.ndarray
    values: np.ndarray
    on_boundary: bool = False

    @property
    def multivalued(self) -> bool:
        return len(self.points) >= 2


def golden_section_batch(func: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                         iterations: int):
    """
    向量化黄金分割搜索：对每个区间 [a_i, b_i] 独立收缩，迭代次数固定。

    Returns:
        (x, f(x))
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    h = b - a
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = func(c)
    yd = func(d)

    for _ in range(iterations):
        left = yc < yd
        h = INV_PHI * h
        # 左移：b <- d, d <- c；右移：a <- c, c <- d
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, a + INV_PHI_SQUARE * h, d)
        new_d = np.where(left, c, a + INV_PHI * h)
        probe = np.where(left, new_c, new_d)
        yp = func(probe)
        yc, yd = np.where(left, yp, yd), np.where(left, yc, yp)
        c, d = new_c, new_d

    better_c = yc < yd
    return np.where(better_c, c, d), np.where(better_c, yc, yd)


def coordinate_descent_batch(func: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                             half_width: np.ndarray, sweeps: int, iterations: int):
    """
    坐标下降：每轮沿各坐标轴在 [x_i - h_i, x_i + h_i] 上做一次黄金分割。

    Args:
        func: (K, n) -> (K,)
        x0: 初始点 (K, n)
        half_width: 每维搜索半宽 (n,)
    """
    x = np.array(x0, dtype=float)
    fx = func(x)
    for _ in range(sweeps):
        for axis in range(x.shape[1]):
            def along(t, axis=axis):
                trial = x.copy()
                trial[:, axis] = t
                return func(trial)

            t, ft = golden_section_batch(along, x[:, axis] - half_width[axis],
                                         x[:, axis] + half_width[axis], iterations)
            improved = ft < fx
            x[improved, axis] = t[improved]
            fx = np.where(improved, ft, fx)
    return x, fx


def local_basins(values: np.ndarray, max_basins: int) -> List[np.ndarray]:
    """
    批量检测网格局部极小点。

    Args:
        values: 形状 (B, *grid_shape)，每行一个目标
        max_basins: 每行最多保留的盆地数（按值从小到大）

    Returns:
        每行的极小点展平下标
    """
    batch = values.shape[0]
    finite = np.isfinite(values)
    is_min = finite.copy()
    for axis in range(1, values.ndim):
        pad = [(0, 0)] * values.ndim
        pad[axis] = (1, 1)
        padded = np.pad(values, pad, mode='constant', constant_values=np.inf)
        n = values.shape[axis]
        before = np.take(padded, np.arange(0, n), axis=axis)
        after = np.take(padded, np.arange(2, n + 2), axis=axis)
        is_min &= (values <= before) & (values <= after)

    flat_min = is_min.reshape(batch, -1)
    flat_values = values.reshape(batch, -1)
    one_dimensional = values.ndim == 2
    result = []
    for row in range(batch):
        idx = np.nonzero(flat_min[row])[0]
        if one_dimensional and idx.size > 1:
            # 平台：连续的极小点只保留中间那个
            breaks = np.nonzero(np.diff(idx) > 1)[0] + 1
            idx = np.array([run[len(run) // 2] for run in np.split(idx, breaks)])
        if idx.size > max_basins:
            order = np.lexsort((idx, flat_values[row, idx]))
            idx = np.sort(idx[order[:max_basins]])
        result.append(idx)
    return result


def _dedupe(points: np.ndarray, values: np.ndarray, tol: float):
    order = np.argsort(values, kind='stable')
    kept = []
    for i in order:
        if all(np.max(np.abs(points[i] - points[j])) > tol for j in kept):
            kept.append(i)
    kept.sort(key=lambda i: tuple(points[i]))
    return points[kept], values[kept]


def minimize_rows(block: np.ndarray, grid: GridSpec, objective: RowObjective,
                  tie_tol: Optional[float], refine_iters: int, max_basins: int,
                  sweeps: int, tie_tol_relative: float) -> List[GridMinimum]:
    """
    一批目标在同一网格上的最小化。

    Args:
        block: 各目标在网格点上的值，形状 (B, N)
        objective: 细化时在任意点上求值的函数，rows 指明所属目标
        tie_tol: 绝对并列容差；None 时取 tie_tol_relative * (1 + |最优值|)

    Raises:
        ImproperFunctionError: 某个目标在网格上处处非有限
    """
    batch = block.shape[0]
    values = block.reshape((batch,) + grid.shape)
    basins = local_basins(values, max_basins)
    points = grid.points()
    spacing = np.asarray(grid.spacing)

    rows, flat = [], []
    for row, idx in enumerate(basins):
        if idx.size == 0:
            raise ImproperFunctionError("improper on grid", row=row)
        rows.append(np.full(idx.size, row))
        flat.append(idx)
    rows = np.concatenate(rows)
    flat = np.concatenate(flat)
    start = points[flat]
    start_values = block[rows, flat]

    lower = np.asarray(grid.lower)
    upper = np.asarray(grid.upper)
    if grid.dimension == 1:
        a = np.maximum(start[:, 0] - spacing[0], lower[0])
        b = np.minimum(start[:, 0] + spacing[0], upper[0])
        x, fx = golden_section_batch(lambda t: objective(t[:, None], rows), a, b, refine_iters)
        refined = x[:, None]
    else:
        refined, fx = coordinate_descent_batch(
            lambda pts: objective(np.clip(pts, lower, upper), rows), start, spacing, sweeps, refine_iters)
        refined = np.clip(refined, lower, upper)
    fx = np.where(np.isnan(fx), np.inf, fx)

    keep_refined = fx <= start_values
    cand_points = np.where(keep_refined[:, None], refined, start)
    cand_values = np.where(keep_refined, fx, start_values)

    dedupe_tol = float(spacing.min())
    results = []
    for row in range(batch):
        mask = rows == row
        row_points = cand_points[mask]
        row_values = cand_values[mask]
        best = float(row_values.min())
        tol = tie_tol if tie_tol is not None else tie_tol_relative * (1.0 + abs(best))
        tied = row_values <= best + tol
        pts, vals = _dedupe(row_points[tied], row_values[tied], dedupe_tol)
        best_grid = int(np.argmin(block[row]))
        results.append(GridMinimum(best, pts, vals, grid.on_boundary(best_grid)))
    return results


def minimize_on_grid(objective: Callable[[np.ndarray], np.ndarray], grid: GridSpec,
                     tie_tol: Optional[float] = None, refine_iters: Optional[int] = None,
                     expand: bool = True) -> GridMinimum:
    """
    单个目标的网格最小化；最优网格点落在边界上时把网格扩大一倍重试一次。

    Args:
        objective: (K, n) -> (K,)

    Raises:
        GridTooSmallError: 扩张后最优点仍在边界上
        ImproperFunctionError: 目标在网格上处处非有限
    """
    from .config import get_settings
    oracle = get_settings().oracle
    iters = oracle.refine_iters if refine_iters is None else refine_iters

    def row_objective(pts, rows):
        return objective(pts)

    current = grid
    for attempt in range(2 if expand else 1):
        block = np.asarray(objective(current.points()), dtype=float)[None, :]
        block = np.where(np.isnan(block), np.inf, block)
        result = minimize_rows(block, current, row_objective, tie_tol, iters,
                               oracle.max_basins, oracle.coordinate_sweeps, oracle.tie_tol_relative)[0]
        if not result.on_boundary or not expand:
            return result
        if attempt == 0:
            logger.debug("grid_expanded", extent=current.max_extent)
            current = current.expanded()
    raise GridTooSmallError("grid too small", extent=current.max_extent)
