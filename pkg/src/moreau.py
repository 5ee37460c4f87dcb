#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Moreau 包络与近端映射

e_rf(x̄) = inf_y { f(y) + (r/2)|y - x̄|² }，P_rf(x̄) 为对应的极小点集合。
一维 max-of-quadratics 且 r > -min alpha 时走精确的断点分解；
其余输入（二维、采样函数、r 介于阈值与曲率界之间）走网格神谕。
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np

from .config import get_settings
from .exceptions import (DimensionMismatchError, GridTooSmallError, MultivaluedProxError, NumericalError,
                         ProxParameterError)
from .funcspace import GridSpec, InputFunction, MaxQuadFunction, SampledFunction, as_points, prox_threshold
from .logging_system import get_structlog_logger
from .oracle import GridMinimum, minimize_rows
from .performance import parallel_map

logger = get_structlog_logger(__name__)

# 每个分块的 (查询数 × 网格点数) 上限
_BLOCK_BUDGET = 2_000_000


@dataclass(eq=False)
class ProxResult:
    """包络值及（可能多值的）近端点集合，minimizers 形状 (K, n)"""

    value: float
    minimizers: np.ndarray

    @property
    def multivalued(self) -> bool:
        return len(self.minimizers) >= 2

    @property
    def point(self) -> np.ndarray:
        """唯一的近端点；多值时报错"""
        if self.multivalued:
            raise MultivaluedProxError("gradient undefined here", minimizers=self.minimizers.tolist())
        return self.minimizers[0]

    def to_dict(self) -> dict:
        return {'value': self.value, 'minimizers': self.minimizers.tolist(), 'multivalued': self.multivalued}


def _tie_tolerance(best, tie_tol: Optional[float]):
    if tie_tol is not None:
        return tie_tol
    return get_settings().oracle.tie_tol_relative * (1.0 + np.abs(best))


# ---------------------------------------------------------------------------
# 一维精确路径
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def cell_decomposition(f: MaxQuadFunction) -> Tuple[Tuple[float, float, int], ...]:
    """
    一维 max-of-quadratics 的断点分解。

    Returns:
        ((lo, hi, 活跃片下标), ...)，相邻且活跃片相同的胞腔已合并
    """
    a, b, g = f.alphas, f.betas[:, 0], f.gammas
    breaks = set()
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            qa, qb, qc = 0.5 * (a[i] - a[j]), b[i] - b[j], g[i] - g[j]
            if qa == 0.0:
                if qb != 0.0:
                    breaks.add(-qc / qb)
                continue
            disc = qb * qb - 4.0 * qa * qc
            if disc < 0.0:
                continue
            root = math.sqrt(disc)
            breaks.update(((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)))

    lo_dom, hi_dom = (-math.inf, math.inf)
    if f.domain is not None:
        lo_dom, hi_dom = f.domain.lower[0], f.domain.upper[0]
    if lo_dom == hi_dom:
        j = int(np.argmax(f.piece_values(np.array([[lo_dom]]))[0]))
        return ((lo_dom, hi_dom, j),)

    edges = [lo_dom] + sorted(x for x in breaks if lo_dom < x < hi_dom) + [hi_dom]
    cells: List[Tuple[float, float, int]] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if not hi > lo:
            continue
        if math.isfinite(lo) and math.isfinite(hi):
            probe = 0.5 * (lo + hi)
        elif math.isfinite(lo):
            probe = lo + 1.0
        elif math.isfinite(hi):
            probe = hi - 1.0
        else:
            probe = 0.0
        j = int(np.argmax(f.piece_values(np.array([[probe]]))[0]))
        if cells and cells[-1][2] == j:
            cells[-1] = (cells[-1][0], hi, j)
        else:
            cells.append((lo, hi, j))
    if not cells:
        raise NumericalError("empty cell decomposition")
    return tuple(cells)


def exact_bound(f: MaxQuadFunction) -> float:
    """精确路径要求 r 严格大于此界：阈值与 -min alpha 的较大者"""
    return max(prox_threshold(f), -f.min_alpha)


def uses_exact_path(f: InputFunction, r: float) -> bool:
    return isinstance(f, MaxQuadFunction) and f.dimension == 1 and r > exact_bound(f)


def _require_exact(f: MaxQuadFunction, r: float) -> None:
    if f.dimension != 1:
        raise DimensionMismatchError("精确近端映射只支持一维函数", expected=1, actual=f.dimension)
    bound = exact_bound(f)
    if not r > bound:
        raise ProxParameterError(f"prox-parameter below threshold: r={r} must exceed {bound}",
                                 r=r, bound=bound)


def _exact_candidates(f: MaxQuadFunction, r: float, xs: np.ndarray):
    """每个胞腔上强凸子问题的极小点（截断到胞腔内）及目标值，形状 (C, N)"""
    cells = cell_decomposition(f)
    lo = np.array([c[0] for c in cells])[:, None]
    hi = np.array([c[1] for c in cells])[:, None]
    j = np.array([c[2] for c in cells])
    a = f.alphas[j][:, None]
    b = f.betas[j, 0][:, None]
    g = f.gammas[j][:, None]
    x = xs[None, :]
    y = np.clip((r * x - b) / (a + r), lo, hi)
    v = 0.5 * a * y * y + b * y + g + 0.5 * r * (y - x) ** 2
    return y, v


def envelope_exact_1d(f: MaxQuadFunction, r: float, xs) -> np.ndarray:
    """向量化精确包络"""
    _require_exact(f, r)
    points, out_shape = as_points(xs, 1)
    _, v = _exact_candidates(f, r, points[:, 0])
    return v.min(axis=0).reshape(out_shape)


def prox_selection_exact_1d(f: MaxQuadFunction, r: float, xs, tie_tol: Optional[float] = None):
    """
    向量化精确近端映射：每点取一个极小点，并标记多值点。

    Returns:
        (values (N,), points (N,), multivalued (N,) bool)
    """
    _require_exact(f, r)
    x = np.asarray(xs, dtype=float).ravel()
    y, v = _exact_candidates(f, r, x)
    best = v.min(axis=0)
    tied = v <= best + _tie_tolerance(best, tie_tol)
    spread = np.where(tied, y, -np.inf).max(axis=0) - np.where(tied, y, np.inf).min(axis=0)
    multivalued = spread > 1e-12 * (1.0 + np.abs(x))
    return best, y[np.argmin(v, axis=0), np.arange(x.size)], multivalued


def prox_exact_many(f: MaxQuadFunction, r: float, xs, tie_tol: Optional[float] = None) -> List[ProxResult]:
    _require_exact(f, r)
    x = np.asarray(xs, dtype=float).ravel()
    y, v = _exact_candidates(f, r, x)
    best = v.min(axis=0)
    tol = np.broadcast_to(_tie_tolerance(best, tie_tol), best.shape)
    results = []
    for i in range(x.size):
        tied = np.sort(y[v[:, i] <= best[i] + tol[i], i])
        keep = [tied[0]]
        for candidate in tied[1:]:
            if candidate - keep[-1] > 1e-12 * (1.0 + abs(candidate)):
                keep.append(candidate)
        results.append(ProxResult(float(best[i]), np.array(keep)[:, None]))
    return results


def prox_exact_1d(f: MaxQuadFunction, r: float, x_bar: float, tie_tol: Optional[float] = None) -> ProxResult:
    """
    一维精确近端映射。

    在每个闭胞腔上最小化严格凸二次函数 f_piece(y) + (r/2)(y - x̄)²
    （无约束极小点截断到胞腔），返回全局最小值及所有并列的胞腔极小点。

    Raises:
        ProxParameterError: r 不超过阈值或 -min alpha
    """
    return prox_exact_many(f, r, [float(np.ravel(x_bar)[0])], tie_tol)[0]


# ---------------------------------------------------------------------------
# 网格神谕路径
# ---------------------------------------------------------------------------

def _callback(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, (MaxQuadFunction, SampledFunction)):
        return lambda pts: np.asarray(f.evaluate(pts), dtype=float).reshape(-1)
    return lambda pts: np.asarray(f(pts), dtype=float).reshape(-1)


def default_oracle_grid(f, queries: np.ndarray) -> GridSpec:
    """神谕默认网格：采样函数用自己的网格，否则以查询点为中心"""
    if isinstance(f, SampledFunction):
        return f.grid
    oracle = get_settings().oracle
    lo, hi = queries.min(axis=0), queries.max(axis=0)
    points = oracle.default_points if queries.shape[1] == 1 else oracle.default_points_2d
    half_width = oracle.default_half_width + 0.5 * float(np.max(hi - lo))
    return GridSpec.centered(0.5 * (lo + hi), half_width, points)


def prox_oracle_many(f_eval, r: float, xs, grid: Optional[GridSpec] = None,
                     refine_iters: Optional[int] = None, tie_tol: Optional[float] = None,
                     base_values: Optional[np.ndarray] = None, dimension: Optional[int] = None,
                     max_workers: Optional[int] = None) -> List[ProxResult]:
    """
    批量网格神谕：f 在网格上只求值一次，每个查询加上 (r/2)|y - x̄|² 后
    找盆地，所有盆地一起做向量化细化。

    Args:
        f_eval: 输入函数或 (N, n) -> (N,) 回调
        xs: 查询点
        base_values: 已知的 f 网格采样，可省去一次求值

    Raises:
        ProxParameterError: r <= 0
        GridTooSmallError: 扩张一次后最优点仍在边界
        ImproperFunctionError: 目标在网格上处处非有限
    """
    if not r > 0:
        raise ProxParameterError(f"prox-parameter below threshold: r={r} must be positive", r=r, bound=0.0)
    if dimension is None:
        dimension = getattr(f_eval, 'dimension', None) or (grid.dimension if grid is not None else 1)
    queries, _ = as_points(xs, dimension)
    func = _callback(f_eval)
    if grid is None:
        grid = default_oracle_grid(f_eval, queries)

    oracle = get_settings().oracle
    iters = oracle.refine_iters if refine_iters is None else refine_iters
    points = grid.points()
    if base_values is None:
        base_values = func(points)
    base_values = np.where(np.isnan(base_values), np.inf, np.asarray(base_values, dtype=float))

    def solve_block(block_queries: np.ndarray, block_grid: GridSpec, block_points, block_base) -> List[GridMinimum]:
        diff = block_points[None, :, :] - block_queries[:, None, :]
        block = block_base[None, :] + 0.5 * r * np.sum(diff * diff, axis=2)

        def objective(pts, rows):
            d = pts - block_queries[rows]
            return func(pts) + 0.5 * r * np.sum(d * d, axis=1)

        return minimize_rows(block, block_grid, objective, tie_tol, iters, oracle.max_basins,
                             oracle.coordinate_sweeps, oracle.tie_tol_relative)

    chunk = int(max(1, min(256, _BLOCK_BUDGET // max(1, grid.size))))
    chunks = [queries[i:i + chunk] for i in range(0, len(queries), chunk)]
    solved = parallel_map(lambda q: solve_block(q, grid, points, base_values), chunks, max_workers)
    minima = [m for block in solved for m in block]

    boundary = [i for i, m in enumerate(minima) if m.on_boundary]
    if boundary:
        big = grid.expanded()
        big_points = big.points()
        big_base = func(big_points)
        big_base = np.where(np.isnan(big_base), np.inf, big_base)
        logger.debug("oracle_grid_expanded", queries=len(boundary), extent=big.max_extent)
        retried = solve_block(queries[boundary], big, big_points, big_base)
        for i, m in zip(boundary, retried):
            if m.on_boundary:
                raise GridTooSmallError("grid too small", extent=big.max_extent)
            minima[i] = m

    return [ProxResult(m.value, m.points) for m in minima]


def prox_oracle(f_eval, r: float, x_bar, grid: Optional[GridSpec] = None,
                refine_iters: Optional[int] = None, tie_tol: Optional[float] = None) -> ProxResult:
    """
    暴力神谕：在网格上最小化 f(y) + (r/2)|y - x̄|²，保留所有并列盆地并细化。
    最优网格点触及边界时把网格扩大一倍重试一次，仍在边界则报 "grid too small"。
    """
    dimension = np.atleast_1d(np.asarray(x_bar, dtype=float)).size
    return prox_oracle_many(f_eval, r, np.atleast_1d(np.asarray(x_bar, dtype=float))[None, :], grid,
                            refine_iters, tie_tol, dimension=dimension)[0]


# ---------------------------------------------------------------------------
# 对外运算
# ---------------------------------------------------------------------------

def _check_threshold(f: InputFunction, r: float) -> None:
    bound = prox_threshold(f)
    if not r > bound:
        raise ProxParameterError(f"prox-parameter below threshold: r={r} must exceed {bound}", r=r, bound=bound)


def prox(f: InputFunction, r: float, x_bar, grid: Optional[GridSpec] = None,
         tie_tol: Optional[float] = None) -> ProxResult:
    """近端映射：一维 max-of-quadratics 走精确路径，其余走神谕"""
    _check_threshold(f, r)
    if uses_exact_path(f, r):
        return prox_exact_1d(f, r, x_bar, tie_tol)
    points, _ = as_points(x_bar, f.dimension)
    return prox_oracle_many(f, r, points[:1], grid, tie_tol=tie_tol, dimension=f.dimension)[0]


def prox_many(f: InputFunction, r: float, xs, grid: Optional[GridSpec] = None,
              tie_tol: Optional[float] = None) -> List[ProxResult]:
    _check_threshold(f, r)
    if uses_exact_path(f, r):
        return prox_exact_many(f, r, xs, tie_tol)
    return prox_oracle_many(f, r, xs, grid, tie_tol=tie_tol, dimension=f.dimension)


def envelope(f: InputFunction, r: float, x_bar, grid: Optional[GridSpec] = None) -> float:
    """Moreau 包络值 e_rf(x̄)，恒有 e_rf(x̄) <= f(x̄)"""
    return prox(f, r, x_bar, grid).value


def envelope_values(f: InputFunction, r: float, xs, grid: Optional[GridSpec] = None) -> np.ndarray:
    """多个点上的包络值，形状 (N,)"""
    if uses_exact_path(f, r):
        return envelope_exact_1d(f, r, np.asarray(xs, dtype=float).reshape(-1))
    return np.array([res.value for res in prox_many(f, r, xs, grid)])


def envelope_gradient(f: InputFunction, r: float, x_bar, grid: Optional[GridSpec] = None) -> np.ndarray:
    """
    ∇e_rf(x̄) = r (x̄ - p)，p 为唯一近端点。

    Raises:
        MultivaluedProxError: 近端映射在 x̄ 处多值
    """
    result = prox(f, r, x_bar, grid)
    point = result.point
    return r * (np.atleast_1d(np.asarray(x_bar, dtype=float)) - point)


def envelope_curve(f: InputFunction, r: float, grid: GridSpec):
    """
    网格上的包络值及梯度；近端映射多值处梯度为 NaN。

    Returns:
        (values (N,), gradients (N, n))
    """
    points = grid.points()
    if uses_exact_path(f, r):
        _check_threshold(f, r)
        values, selected, multivalued = prox_selection_exact_1d(f, r, points[:, 0])
        gradients = (r * (points[:, 0] - selected))[:, None]
        gradients[multivalued] = np.nan
        return values, gradients
    results = prox_many(f, r, points, None if not isinstance(f, SampledFunction) else f.grid)
    values = np.array([res.value for res in results])
    gradients = np.array([r * (x - res.minimizers[0]) if not res.multivalued
                          else np.full(grid.dimension, np.nan) for x, res in zip(points, results)])
    return values, gradients


def double_envelope(f: InputFunction, r: float, x_bar, grid: Optional[GridSpec] = None) -> float:
    """
    近端包 -e_r(-e_rf)(x̄)：内层包络作为回调，外层用神谕，结果恒不超过 f(x̄)。
    """
    _check_threshold(f, r)
    point = np.atleast_1d(np.asarray(x_bar, dtype=float))
    if grid is None:
        oracle = get_settings().oracle
        count = oracle.default_points if point.size == 1 else oracle.default_points_2d
        grid = GridSpec.centered(point, oracle.default_half_width, count)

    def negated_envelope(pts):
        return -envelope_values(f, r, pts, grid)

    result = prox_oracle_many(negated_envelope, r, point[None, :], grid, dimension=point.size)[0]
    return -result.value
