#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
NC 近端平均

PA_{r,δ}(x, λ) = -e_{r+δ(λ)}(F_λ)(x)，其中 F_λ = -Σ λ_i e_r f_i。
一维 max-of-quadratics 的内层包络用精确公式；其余函数的内层包络在外层网格上
采样后线性插值。F_λ 在外层网格之外取 +∞。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import get_settings
from .exceptions import DimensionMismatchError, InputError, ProxParameterError
from .funcspace import (
    GridSpec, InputFunction, MaxQuadFunction, SampledFunction, SimplexWeight,
    _shape_result, as_points, hausdorff_distance, prox_threshold,
)
from .logging_system import get_structlog_logger, performance_logger
from .moreau import envelope_exact_1d, envelope_values, prox_oracle_many, uses_exact_path
from .oracle import minimize_on_grid
from .performance import fingerprint, get_default_cache_manager

logger = get_structlog_logger(__name__)

DELTA_VERTEX_TOL = 1e-12


# ---------------------------------------------------------------------------
# δ(λ)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeltaSpec:
    """
    扰动函数 δ(λ)：单纯形顶点处为 0，其余处为正。

    symmetric_quadratic: δ(λ) = (1/2)(1 - Σλ_i²)
    custom_polynomial:   δ(λ) = Σ coef · Π λ_i^powers_i
    """

    kind: str = 'symmetric_quadratic'
    terms: Tuple[Tuple[Tuple[int, ...], float], ...] = ()

    def __post_init__(self):
        if self.kind not in ('symmetric_quadratic', 'custom_polynomial'):
            raise InputError(f"未知的 delta 类型: {self.kind!r}", parameter="delta")
        terms = tuple((tuple(int(p) for p in powers), float(coef)) for powers, coef in self.terms)
        if self.kind == 'custom_polynomial' and not terms:
            raise InputError("custom_polynomial 至少需要一个项", parameter="delta")
        object.__setattr__(self, 'terms', terms)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DeltaSpec":
        kind = data.get('kind', 'symmetric_quadratic')
        terms = tuple((tuple(t['powers']), t['coef']) for t in data.get('terms', []))
        return cls(kind, terms)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == 'symmetric_quadratic':
            return {'kind': self.kind}
        return {'kind': self.kind, 'terms': [{'powers': list(p), 'coef': c} for p, c in self.terms]}

    def evaluate(self, weights: np.ndarray) -> float:
        weights = np.asarray(weights, dtype=float)
        if self.kind == 'symmetric_quadratic':
            return 0.5 * (1.0 - float(np.dot(weights, weights)))
        total = 0.0
        for powers, coef in self.terms:
            if len(powers) != weights.size:
                raise DimensionMismatchError("delta 项的幂次长度与权重个数不一致",
                                             expected=weights.size, actual=len(powers))
            total += coef * float(np.prod(weights ** np.asarray(powers)))
        return total

    def validate(self, m: int, samples: int = 1000, seed: int = 0) -> List[str]:
        """
        顶点处 |δ| <= 1e-12，1000 个 Dirichlet 内点处 δ > 0。

        Returns:
            验证错误信息列表
        """
        errors = []
        if self.kind == 'custom_polynomial':
            bad = [p for p, _ in self.terms if len(p) != m]
            if bad:
                return [f"delta 项的幂次长度应为 {m}"]
        for i in range(m):
            value = self.evaluate(np.eye(m)[i])
            if abs(value) > DELTA_VERTEX_TOL:
                errors.append(f"delta 在顶点 e_{i + 1} 处应为 0，实际为 {value!r}")
        if m >= 2:
            rng = np.random.default_rng(seed)
            interior = rng.dirichlet(np.ones(m), size=samples)
            values = np.array([self.evaluate(w) for w in interior])
            if np.any(values <= 0):
                worst = int(np.argmin(values))
                errors.append(f"delta 在内点 {interior[worst].tolist()} 处不为正: {values[worst]!r}")
        return errors


def delta_eval(spec: DeltaSpec, lam) -> float:
    """δ(λ)；λ 不在单纯形上时报 SimplexError"""
    weights = SimplexWeight.of(lam)
    if weights.is_vertex:
        return 0.0
    return spec.evaluate(weights.as_array())


# ---------------------------------------------------------------------------
# 问题对象
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProxAverageProblem:
    """m 个函数、内层参数 r、δ 以及内外两层网格"""

    functions: Tuple[InputFunction, ...]
    r: float
    delta: DeltaSpec = field(default_factory=DeltaSpec)
    inner_grid: Optional[GridSpec] = None
    outer_grid: Optional[GridSpec] = None

    @classmethod
    def create(cls, functions: Sequence[InputFunction], r: float, delta: Optional[DeltaSpec] = None,
               inner_grid: Optional[GridSpec] = None, outer_grid: Optional[GridSpec] = None,
               check_thresholds: bool = True) -> "ProxAverageProblem":
        """
        构建并验证问题。

        Args:
            check_thresholds: 要求 r 严格大于每个 f_i 的近端有界阈值

        Raises:
            InputError: 函数列表为空或 r 非法
            DimensionMismatchError: 函数维度不一致或网格维度不符
            ProxParameterError: r 不超过某个阈值
        """
        functions = tuple(functions)
        if not functions:
            raise InputError("至少需要一个函数", parameter="functions")
        dimension = functions[0].dimension
        for f in functions:
            if f.dimension != dimension:
                raise DimensionMismatchError("函数维度不一致", expected=dimension, actual=f.dimension)
        if not (math.isfinite(r) and r > 0):
            raise InputError(f"r 必须是正的有限数值: {r}", parameter="r")
        if check_thresholds:
            for i, f in enumerate(functions):
                bound = prox_threshold(f)
                if not r > bound:
                    raise ProxParameterError(
                        f"prox-parameter below threshold: r={r} must exceed {bound} (function {i + 1})",
                        r=r, bound=bound)
        if inner_grid is None:
            inner_grid = GridSpec.default(dimension)
        if inner_grid.dimension != dimension:
            raise DimensionMismatchError("网格维度与函数不一致", expected=dimension, actual=inner_grid.dimension)
        if outer_grid is None:
            outer_grid = inner_grid.padded(get_settings().oracle.outer_padding)
        return cls(functions, float(r), delta or DeltaSpec(), inner_grid, outer_grid)

    @property
    def m(self) -> int:
        return len(self.functions)

    @property
    def dimension(self) -> int:
        return self.functions[0].dimension

    @property
    def fingerprint(self) -> str:
        keys = [f.cache_key() if isinstance(f, SampledFunction) else f for f in self.functions]
        return fingerprint(keys, self.r, self.delta, self.inner_grid, self.outer_grid)

    @property
    def all_exact(self) -> bool:
        return all(uses_exact_path(f, self.r) for f in self.functions)

    @property
    def interpolation_slack(self) -> float:
        """插值内层包络带来的额外容差（精确路径为 0）"""
        if self.all_exact:
            return 0.0
        return self.r * max(self.outer_grid.spacing) ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dimension': self.dimension,
            'functions': [_function_to_dict(f) for f in self.functions],
            'r': self.r,
            'delta': self.delta.to_dict(),
            'grid': self.inner_grid.to_dict(),
        }


def _function_to_dict(f: InputFunction) -> Dict[str, Any]:
    if not isinstance(f, MaxQuadFunction):
        raise InputError("采样函数无法写入问题文件", parameter="functions")
    data: Dict[str, Any] = {'pieces': [{'alpha': p.alpha, 'beta': list(p.beta), 'gamma': p.gamma}
                                       for p in f.pieces]}
    if f.domain is not None:
        data['domain'] = {'lower': list(f.domain.lower), 'upper': list(f.domain.upper)}
    return data


def _weights(problem: ProxAverageProblem, lam) -> SimplexWeight:
    weights = SimplexWeight.of(lam)
    if weights.m != problem.m:
        raise DimensionMismatchError(f"λ 的长度应为 {problem.m}", expected=problem.m, actual=weights.m)
    return weights


def _sampled_envelope(problem: ProxAverageProblem, index: int, grid: GridSpec) -> SampledFunction:
    """f_i 的包络在给定网格（外层网格或其扩张）上的采样（缓存）"""
    f = problem.functions[index]
    key = fingerprint('envelope-samples', problem.fingerprint, index, grid)

    def compute():
        logger.debug("sampling_inner_envelope", function=index + 1, points=grid.size, r=problem.r)
        values = envelope_values(f, problem.r, grid.points(), grid)
        return SampledFunction(grid, values)

    return get_default_cache_manager().get_or_compute(key, compute)


def envelope_of(problem: ProxAverageProblem, index: int, points: np.ndarray) -> np.ndarray:
    """
    e_r f_i 在 (N, n) 点阵上的值：精确或插值。
    插值在外层网格上进行；超出外层网格的点改用扩张一倍的网格采样，再往外为 +inf。
    """
    f = problem.functions[index]
    if uses_exact_path(f, problem.r):
        return envelope_exact_1d(f, problem.r, points[:, 0])
    outer = problem.outer_grid
    values = np.asarray(_sampled_envelope(problem, index, outer).evaluate(points), dtype=float).reshape(-1)
    outside = ~outer.contains(points)
    if outside.any():
        wide = _sampled_envelope(problem, index, outer.expanded())
        values[outside] = np.asarray(wide.evaluate(points[outside]), dtype=float).reshape(-1)
    return values


def _weighted_points(problem: ProxAverageProblem, points: np.ndarray, weights: SimplexWeight) -> np.ndarray:
    total = np.zeros(len(points))
    for i, w in enumerate(weights):
        if w == 0.0:
            continue
        total += w * envelope_of(problem, i, points)
    return total


def weighted_envelope(problem: ProxAverageProblem, xs, lam):
    """Σ λ_i e_r f_i(x) = -F_λ(x)"""
    weights = _weights(problem, lam)
    points, out_shape = as_points(xs, problem.dimension)
    return _shape_result(_weighted_points(problem, points, weights), out_shape)


def inner_function(problem: ProxAverageProblem, lam):
    """
    F_λ(x) = -Σ λ_i e_r f_i(x)，返回求值回调；回调接受任意形状的点输入。
    """
    weights = _weights(problem, lam)

    def F(xs):
        points, out_shape = as_points(xs, problem.dimension)
        return _shape_result(-_weighted_points(problem, points, weights), out_shape)

    return F


def _outer_objective(problem: ProxAverageProblem, weights: SimplexWeight):
    # 不在外层网格处截断：最优点落在边界时由神谕扩张网格重试
    def F(points):
        return -_weighted_points(problem, points, weights)

    return F


def _outer_samples(problem: ProxAverageProblem, weights: SimplexWeight) -> np.ndarray:
    key = fingerprint('inner-function-samples', problem.fingerprint, weights.weights)
    return get_default_cache_manager().get_or_compute(
        key, lambda: -_weighted_points(problem, problem.outer_grid.points(), weights))


def pa_values(problem: ProxAverageProblem, xs, lam, tie_tol: Optional[float] = None):
    """
    批量计算 PA(x, λ)：以 r + δ(λ) 对 F_λ 在外层网格上做神谕近端，取负。
    """
    weights = _weights(problem, lam)
    points, out_shape = as_points(xs, problem.dimension)
    outer_r = problem.r + delta_eval(problem.delta, weights)
    results = prox_oracle_many(_outer_objective(problem, weights), outer_r, points, problem.outer_grid,
                               tie_tol=tie_tol, base_values=_outer_samples(problem, weights),
                               dimension=problem.dimension)
    return _shape_result(-np.array([res.value for res in results]), out_shape)


def pa_eval(problem: ProxAverageProblem, x, lam) -> float:
    """
    NC 近端平均 PA_{r,δ}(x, λ) = sup_y { Σλ_i e_r f_i(y) - ((r+δ(λ))/2)|y - x|² }。
    """
    points, _ = as_points(x, problem.dimension)
    if len(points) != 1:
        raise DimensionMismatchError("pa_eval 只接受单个点", expected=1, actual=len(points))
    return float(pa_values(problem, points, lam)[0])


@performance_logger("pa_curve")
def pa_curve(problem: ProxAverageProblem, lam, grid: Optional[GridSpec] = None) -> SampledFunction:
    """PA(·, λ) 在网格上的采样（默认内层网格）"""
    grid = grid or problem.inner_grid
    values = pa_values(problem, grid.points(), lam)
    return SampledFunction(grid, np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# 极小点
# ---------------------------------------------------------------------------

@dataclass
class ArgminSet:
    """网格细化后的极小点集合 (K, n) 及最小值"""

    points: np.ndarray
    value: float

    @property
    def multivalued(self) -> bool:
        return len(self.points) >= 2


def argmin_of(problem: ProxAverageProblem, lam, grid: Optional[GridSpec] = None,
              objective: str = 'weighted', tie_tol: Optional[float] = None) -> ArgminSet:
    """
    在网格上最小化 Σλ_i e_r f_i（objective='weighted'）或 PA(·, λ)（objective='pa'），
    保留所有并列盆地。
    """
    weights = _weights(problem, lam)
    grid = grid or problem.inner_grid
    if objective == 'weighted':
        def func(points):
            return _weighted_points(problem, points, weights)
    elif objective == 'pa':
        def func(points):
            return np.asarray(pa_values(problem, points, weights, tie_tol), dtype=float).reshape(-1)
    else:
        raise InputError(f"未知的目标: {objective!r}", parameter="objective")
    result = minimize_on_grid(func, grid, tie_tol=tie_tol)
    return ArgminSet(result.points, result.value)


@dataclass
class ArgminEquivalenceReport:
    lam: Tuple[float, ...]
    argmin_pa: np.ndarray
    argmin_weighted: np.ndarray
    distance: float
    tol: float

    @property
    def agree(self) -> bool:
        return self.distance <= self.tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': list(self.lam),
            'argmin_pa': self.argmin_pa.tolist(),
            'argmin_weighted': self.argmin_weighted.tolist(),
            'distance': self.distance,
            'agree': self.agree,
        }


def argmin_equivalence(problem: ProxAverageProblem, lam, grid: Optional[GridSpec] = None,
                       tol: float = 1e-4) -> ArgminEquivalenceReport:
    """PA(·, λ) 与 Σλ_i e_r f_i 的极小点集合之间的 Hausdorff 距离"""
    weights = _weights(problem, lam)
    pa_set = argmin_of(problem, weights, grid, objective='pa')
    weighted_set = argmin_of(problem, weights, grid, objective='weighted')
    distance = hausdorff_distance(pa_set.points, weighted_set.points)
    logger.debug("argmin_equivalence", weights=weights.weights, distance=distance)
    return ArgminEquivalenceReport(weights.weights, pa_set.points, weighted_set.points, distance, tol)
