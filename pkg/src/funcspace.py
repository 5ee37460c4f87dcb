#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
函数空间模块
定义输入函数（二次片的逐点最大值、网格采样函数）、近端有界阈值、
单纯形权重和采样网格。所有类型构造后不可变，可在线程间共享。
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial.distance import directed_hausdorff

from .exceptions import DimensionMismatchError, InputError, SimplexError
from .logging_system import get_structlog_logger

logger = get_structlog_logger(__name__)

SIMPLEX_TOL = 1e-12


def as_points(x, dimension: int) -> Tuple[np.ndarray, tuple]:
    """
    把输入整理成 (N, n) 点阵。

    一维时标量或任意形状数组都视为点的集合（末维为 1 的数组也可）；
    二维时末维必须为 2。

    Returns:
        (points, 输出形状)
    """
    arr = np.asarray(x, dtype=float)
    if dimension == 1:
        if arr.ndim >= 2 and arr.shape[-1] == 1:
            out_shape = arr.shape[:-1]
        else:
            out_shape = arr.shape
        return arr.reshape(-1, 1), out_shape
    if arr.ndim == 0 or arr.shape[-1] != dimension:
        raise DimensionMismatchError(
            f"点的维度应为 {dimension}，输入形状为 {arr.shape}",
            expected=dimension, actual=arr.shape[-1] if arr.ndim else 0)
    return arr.reshape(-1, dimension), arr.shape[:-1]


def _shape_result(values: np.ndarray, out_shape: tuple):
    if out_shape == ():
        return float(values[0])
    return values.reshape(out_shape)


# ---------------------------------------------------------------------------
# 二次片与 max-of-quadratics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticPiece:
    """二次片 (alpha/2)|x|² + <beta, x> + gamma"""

    alpha: float
    beta: Tuple[float, ...]
    gamma: float

    def __post_init__(self):
        beta = tuple(float(b) for b in np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, 'alpha', float(self.alpha))
        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'gamma', float(self.gamma))
        if not all(math.isfinite(v) for v in (self.alpha, self.gamma, *beta)):
            raise InputError("二次片的系数必须全部有限", parameter="piece")

    @property
    def dimension(self) -> int:
        return len(self.beta)

    def value(self, points: np.ndarray) -> np.ndarray:
        """在 (N, n) 点阵上求值"""
        return 0.5 * self.alpha * np.sum(points * points, axis=-1) + points @ np.asarray(self.beta) + self.gamma

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return self.alpha * points + np.asarray(self.beta)


@dataclass(frozen=True)
class DomainBox:
    """坐标轴对齐的定义域盒，盒外函数值为 +∞"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        if len(lower) != len(upper):
            raise DimensionMismatchError("定义域上下界维度不一致", expected=len(lower), actual=len(upper))
        if any(lo > hi for lo, hi in zip(lower, upper)):
            raise InputError("定义域为空：下界大于上界", parameter="domain")

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.all((points >= np.asarray(self.lower)) & (points <= np.asarray(self.upper)), axis=-1)


@dataclass(frozen=True)
class MaxQuadFunction:
    """有限个二次片的逐点最大值，可选定义域盒"""

    dimension: int
    pieces: Tuple[QuadraticPiece, ...]
    domain: Optional[DomainBox] = None

    def __post_init__(self):
        object.__setattr__(self, 'pieces', tuple(self.pieces))
        if self.dimension < 1:
            raise InputError("维度必须是正整数", parameter="dimension")
        if not self.pieces:
            raise InputError("至少需要一个二次片", parameter="pieces")
        for piece in self.pieces:
            if piece.dimension != self.dimension:
                raise DimensionMismatchError(
                    f"二次片的 beta 长度应为 {self.dimension}",
                    expected=self.dimension, actual=piece.dimension)
        if self.domain is not None and len(self.domain.lower) != self.dimension:
            raise DimensionMismatchError("定义域盒维度与函数不一致",
                                         expected=self.dimension, actual=len(self.domain.lower))

    @cached_property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.pieces])

    @cached_property
    def betas(self) -> np.ndarray:
        return np.array([p.beta for p in self.pieces])

    @cached_property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.pieces])

    @property
    def min_alpha(self) -> float:
        return float(self.alphas.min())

    @property
    def max_alpha(self) -> float:
        return float(self.alphas.max())

    def piece_values(self, points: np.ndarray) -> np.ndarray:
        """(N, n) 点阵上每个片的值，形状 (N, k)"""
        sq = np.sum(points * points, axis=-1, keepdims=True)
        return 0.5 * sq * self.alphas + points @ self.betas.T + self.gammas

    def evaluate(self, x):
        """逐点最大值；定义域外为 +∞"""
        points, out_shape = as_points(x, self.dimension)
        values = self.piece_values(points).max(axis=1)
        if self.domain is not None:
            values = np.where(self.domain.contains(points), values, np.inf)
        return _shape_result(values, out_shape)

    __call__ = evaluate


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """
    网格采样函数：网格内线性插值，网格外 +∞。
    作为神谕输入时其近端有界阈值由调用方声明。
    """

    grid: "GridSpec"
    values: np.ndarray
    threshold: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.size != self.grid.size:
            raise DimensionMismatchError(
                f"采样值个数 {values.size} 与网格点数 {self.grid.size} 不一致",
                expected=self.grid.size, actual=values.size)
        if np.isnan(values).any() or np.isneginf(values).any():
            raise InputError("采样值不能包含 NaN 或 -∞", parameter="values")
        values = values.reshape(self.grid.shape)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @cached_property
    def _interpolator(self):
        if self.dimension == 1:
            return None
        return RegularGridInterpolator(self.grid.axes, self.values, method='linear',
                                       bounds_error=False, fill_value=np.inf)

    def evaluate(self, x):
        points, out_shape = as_points(x, self.dimension)
        if self.dimension == 1:
            axis = self.grid.axes[0]
            with np.errstate(invalid='ignore'):
                values = np.interp(points[:, 0], axis, self.values, left=np.inf, right=np.inf)
        else:
            with np.errstate(invalid='ignore'):
                values = self._interpolator(points)
        # +∞ 与有限值之间插值得到 NaN，按 +∞ 处理
        values = np.where(np.isnan(values), np.inf, values)
        return _shape_result(values, out_shape)

    __call__ = evaluate

    def cache_key(self) -> tuple:
        return (self.grid, self.values.tobytes(), self.threshold)


InputFunction = Union[MaxQuadFunction, SampledFunction]


def evaluate(f: InputFunction, x):
    """求值：max over pieces，定义域外 +∞"""
    return f.evaluate(x)


def prox_threshold(f: InputFunction) -> float:
    """
    近端有界阈值 r̄ = max(0, -max_j alpha_j)。

    有界定义域盒上 f + (r/2)q 对任意 r ≥ 0 有下界，阈值为 0；
    采样函数返回调用方声明的阈值。
    """
    if isinstance(f, SampledFunction):
        return float(f.threshold)
    if f.domain is not None:
        return 0.0
    return max(0.0, -f.max_alpha)


def active_pieces(f: MaxQuadFunction, x, tol: float = 1e-9) -> List[int]:
    """在单点 x 处取到最大值的二次片下标"""
    points, _ = as_points(x, f.dimension)
    values = f.piece_values(points[:1])[0]
    best = values.max()
    return [int(j) for j in np.nonzero(values >= best - tol * (1.0 + abs(best)))[0]]


def active_gradients(f: MaxQuadFunction, points: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """
    (N, n) 点阵上每个片的梯度及活跃掩码。

    Returns:
        (gradients 形状 (k, N, n), active 形状 (k, N))
    """
    values = f.piece_values(points)
    best = values.max(axis=1, keepdims=True)
    active = (values >= best - tol * (1.0 + np.abs(best))).T
    gradients = f.alphas[:, None, None] * points[None, :, :] + f.betas[:, None, :]
    return gradients, active


def midpoint_convexity_scan(values: np.ndarray, grid: "GridSpec", rel_tol: float = 1e-9) -> List[Tuple[tuple, float]]:
    """
    沿每个坐标轴检查相邻三点的中点凸性 v[i] <= (v[i-1] + v[i+1]) / 2。

    含 +∞ 的三元组跳过。

    Returns:
        违反列表 [(中心点下标, margin)]，margin 为负值
    """
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    violations = []
    for axis in range(grid.dimension):
        left = np.take(values, np.arange(0, grid.shape[axis] - 2), axis=axis)
        mid = np.take(values, np.arange(1, grid.shape[axis] - 1), axis=axis)
        right = np.take(values, np.arange(2, grid.shape[axis]), axis=axis)
        finite = np.isfinite(left) & np.isfinite(mid) & np.isfinite(right)
        margin = np.where(finite, 0.5 * (left + right) - mid, 0.0)
        bad = margin < -rel_tol * (1.0 + np.abs(np.where(finite, mid, 0.0)))
        for idx in zip(*np.nonzero(bad)):
            centre = list(idx)
            centre[axis] += 1
            violations.append((tuple(int(i) for i in centre), float(margin[idx])))
    return violations


def is_shift_convex(f: InputFunction, c: float, grid: Optional["GridSpec"] = None,
                    rel_tol: float = 1e-9) -> bool:
    """
    判断 f + (c/2)|x|² 是否凸。

    先用保守的片曲率检验 min_j alpha_j + c >= 0；失败时在网格上做
    中点凸性采样，返回采样结论（只能证伪，不能证明）。
    """
    if c < 0:
        raise InputError("平移参数 c 必须非负", parameter="c")
    if isinstance(f, MaxQuadFunction) and f.min_alpha + c >= 0:
        return True
    if grid is None:
        grid = GridSpec.default(f.dimension)
    values = f.evaluate(grid.points()) + 0.5 * c * np.sum(grid.points() ** 2, axis=1)
    violations = midpoint_convexity_scan(values, grid, rel_tol)
    logger.debug("sampled_convexity_verdict", c=c, points=grid.size, violations=len(violations))
    return not violations


# ---------------------------------------------------------------------------
# 网格
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """每维下界、上界和点数"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    points_per_axis: Tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        counts = tuple(int(p) for p in self.points_per_axis)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        object.__setattr__(self, 'points_per_axis', counts)
        if not (len(lower) == len(upper) == len(counts)) or not lower:
            raise DimensionMismatchError("网格各字段维度不一致")
        for lo, hi, p in zip(lower, upper, counts):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise InputError(f"网格下界必须小于上界: [{lo}, {hi}]", parameter="grid")
            if p < 2:
                raise InputError("网格每维至少需要 2 个点", parameter="grid")

    @classmethod
    def from_axes(cls, axes: Sequence[Tuple[float, float, int]]) -> "GridSpec":
        """由 (lower, upper, points) 三元组列表构建"""
        return cls(tuple(a[0] for a in axes), tuple(a[1] for a in axes), tuple(a[2] for a in axes))

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(tuple(data['lower']), tuple(data['upper']), tuple(data['points']))

    def to_dict(self) -> dict:
        return {'lower': list(self.lower), 'upper': list(self.upper), 'points': list(self.points_per_axis)}

    @classmethod
    def centered(cls, x, half_width: float, points: int) -> "GridSpec":
        """以 x 为中心、半宽 half_width 的网格"""
        centre = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(tuple(centre - half_width), tuple(centre + half_width), (points,) * centre.size)

    @classmethod
    def default(cls, dimension: int, centre=None) -> "GridSpec":
        from .config import get_settings
        oracle = get_settings().oracle
        points = oracle.default_points if dimension == 1 else oracle.default_points_2d
        if centre is None:
            centre = np.zeros(dimension)
        return cls.centered(centre, oracle.default_half_width, points)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.points_per_axis))

    @cached_property
    def axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.linspace(lo, hi, p) for lo, hi, p in zip(self.lower, self.upper, self.points_per_axis))

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / (p - 1) for lo, hi, p in zip(self.lower, self.upper, self.points_per_axis))

    @property
    def extent(self) -> Tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def max_extent(self) -> float:
        return max(self.extent)

    def points(self) -> np.ndarray:
        """(N, n) 点阵，按 'ij' 顺序展开"""
        mesh = np.meshgrid(*self.axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)

    def expanded(self) -> "GridSpec":
        """以中心为基准把范围扩大一倍，间距不变"""
        return self.padded(0.5)

    def padded(self, fraction: float) -> "GridSpec":
        """每侧各加宽 fraction * 范围，间距不变"""
        lower, upper, counts = [], [], []
        for lo, hi, p, h in zip(self.lower, self.upper, self.points_per_axis, self.spacing):
            k = int(round(fraction * (p - 1)))
            lower.append(lo - k * h)
            upper.append(hi + k * h)
            counts.append(p + 2 * k)
        return GridSpec(tuple(lower), tuple(upper), tuple(counts))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.all((points >= np.asarray(self.lower)) & (points <= np.asarray(self.upper)), axis=-1)

    def on_boundary(self, flat_index: int) -> bool:
        index = np.unravel_index(flat_index, self.shape)
        return any(i == 0 or i == p - 1 for i, p in zip(index, self.shape))


# ---------------------------------------------------------------------------
# 单纯形
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimplexWeight:
    """单位单纯形上的一点 λ；绝对值 1e-12 以内的负分量截为 0"""

    weights: Tuple[float, ...]

    def __post_init__(self):
        try:
            raw = [float(w) for w in self.weights]
        except (TypeError, ValueError):
            raise SimplexError(f"无法解析权重: {self.weights!r}")
        if not raw:
            raise SimplexError("权重向量不能为空")
        if not all(math.isfinite(w) for w in raw):
            raise SimplexError(f"权重必须有限: {raw}", weights=tuple(raw))
        if min(raw) < -SIMPLEX_TOL:
            raise SimplexError(f"权重不能为负: {raw}", weights=tuple(raw))
        if abs(math.fsum(raw) - 1.0) > SIMPLEX_TOL:
            raise SimplexError(f"权重之和必须为 1，实际为 {math.fsum(raw)!r}", weights=tuple(raw))
        object.__setattr__(self, 'weights', tuple(max(0.0, w) for w in raw))

    @classmethod
    def of(cls, value) -> "SimplexWeight":
        return value if isinstance(value, SimplexWeight) else cls(tuple(value))

    @classmethod
    def vertex(cls, m: int, i: int) -> "SimplexWeight":
        """第 i 个顶点 e_i（从 0 开始）"""
        if not 0 <= i < m:
            raise InputError(f"顶点下标 {i} 超出范围 [0, {m})", parameter="vertex")
        return cls(tuple(1.0 if j == i else 0.0 for j in range(m)))

    @classmethod
    def centroid(cls, m: int) -> "SimplexWeight":
        return cls(tuple([1.0 / m] * m))

    @property
    def m(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.array(self.weights)

    @property
    def vertex_index(self) -> Optional[int]:
        for i, w in enumerate(self.weights):
            if abs(w - 1.0) <= SIMPLEX_TOL:
                return i
        return None

    @property
    def is_vertex(self) -> bool:
        return self.vertex_index is not None

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def __getitem__(self, i: int) -> float:
        return self.weights[i]


def simplex_path(a: SimplexWeight, b: SimplexWeight, steps: int) -> List[SimplexWeight]:
    """
    直线路径 (1-t)a + tb，t = k/(steps-1)。

    Raises:
        DimensionMismatchError: a 与 b 的 m 不同
        InputError: steps < 2
    """
    a, b = SimplexWeight.of(a), SimplexWeight.of(b)
    if a.m != b.m:
        raise DimensionMismatchError("路径端点的权重维度不一致", expected=a.m, actual=b.m)
    if steps < 2:
        raise InputError("steps 至少为 2", parameter="steps")
    start, end = a.as_array(), b.as_array()
    path = []
    for k in range(steps):
        t = k / (steps - 1)
        weights = np.clip(start * (1.0 - t) + end * t, 0.0, None)
        path.append(SimplexWeight(tuple(float(w) for w in weights)))
    return path


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """两个有限点集（(K, n) 数组）之间的 Hausdorff 距离"""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        return math.inf
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))
