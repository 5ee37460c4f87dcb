#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
极小点映射 Φ(λ) 的路径跟踪

沿单纯形路径对 Σλ_i e_r f_i 做网格最小化（其极小点与 PA(·, λ) 的极小点一致），
保留所有并列盆地，检测相邻记录之间的跳变，并验证极限点的临界性。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .config import get_settings
from .exceptions import ConvergenceInputError, DimensionMismatchError, InputError
from .funcspace import GridSpec, SimplexWeight, hausdorff_distance
from .logging_system import get_structlog_logger, performance_logger
from .performance import parallel_map
from .proxavg import ProxAverageProblem, argmin_of, pa_values, weighted_envelope
from .regularity import CheckReport

logger = get_structlog_logger(__name__)

GRADIENT_STEP = 1e-6
PA_GRADIENT_STEP = 1e-5
CROSS_CHECK_TOL = 1e-5


@dataclass
class ArgminRecord:
    """路径上一个 λ 处的极小点集合"""

    lam: SimplexWeight
    t: float
    argmin: np.ndarray
    min_value: float
    gradient_norms: List[float] = field(default_factory=list)
    pa_min_value: Optional[float] = None

    @property
    def multivalued(self) -> bool:
        return len(self.argmin) >= 2

    def to_dict(self) -> Dict[str, Any]:
        data = {
            't': self.t,
            'lambda': list(self.lam.weights),
            'argmin': self.argmin.tolist(),
            'min_value': self.min_value,
            'gradient_norms': self.gradient_norms,
        }
        if self.pa_min_value is not None:
            data['pa_min_value'] = self.pa_min_value
        return data


@dataclass
class JumpEvent:
    lam_star: SimplexWeight
    t_star: float
    left: np.ndarray
    right: np.ndarray
    magnitude: float
    index: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda_star': list(self.lam_star.weights),
            't_star': self.t_star,
            'left': self.left.tolist(),
            'right': self.right.tolist(),
            'magnitude': self.magnitude,
            'index': self.index,
        }


@dataclass
class ArgminPath:
    records: List[ArgminRecord]
    jumps: List[JumpEvent]
    cross_check_failures: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'records': [r.to_dict() for r in self.records],
            'jumps': [j.to_dict() for j in self.jumps],
            'cross_check_failures': self.cross_check_failures,
        }


def _gradient_norms(problem: ProxAverageProblem, weights: SimplexWeight, points: np.ndarray) -> List[float]:
    """Σλ_i e_r f_i 在各极小点处的中心差分梯度范数"""
    n = points.shape[1]
    offsets = GRADIENT_STEP * np.eye(n)
    probes = np.concatenate([points[:, None, :] + offsets, points[:, None, :] - offsets], axis=1)
    values = np.asarray(weighted_envelope(problem, probes.reshape(-1, n), weights)).reshape(len(points), 2 * n)
    grads = (values[:, :n] - values[:, n:]) / (2.0 * GRADIENT_STEP)
    return [float(g) for g in np.linalg.norm(grads, axis=1)]


def _path_parameters(count: int) -> List[float]:
    if count == 1:
        return [0.0]
    return [k / (count - 1) for k in range(count)]


@performance_logger("track_argmin")
def track_argmin(problem: ProxAverageProblem, path: Sequence, grid: Optional[GridSpec] = None,
                 tie_tol: Optional[float] = None, jump_threshold: Optional[float] = None,
                 cross_check: bool = True, seed: int = 0) -> ArgminPath:
    """
    沿 λ 路径跟踪 argmin Σλ_i e_r f_i。

    Args:
        path: SimplexWeight 列表（或可转换的权重序列）
        jump_threshold: 跳变阈值，默认 0.01 * 网格最大范围
        cross_check: 随机抽取约 10% 的记录，与直接最小化 PA 的结果比较最小值

    Returns:
        ArgminPath
    """
    weights = [SimplexWeight.of(lam) for lam in path]
    if not weights:
        raise InputError("λ 路径不能为空", parameter="path")
    grid = grid or problem.inner_grid
    settings = get_settings().paths
    ts = _path_parameters(len(weights))

    def solve(item: Tuple[float, SimplexWeight]) -> ArgminRecord:
        t, lam = item
        found = argmin_of(problem, lam, grid, objective='weighted', tie_tol=tie_tol)
        return ArgminRecord(lam, t, found.points, found.value, _gradient_norms(problem, lam, found.points))

    records = parallel_map(solve, list(zip(ts, weights)))

    failures: List[Dict[str, Any]] = []
    if cross_check:
        rng = np.random.default_rng(seed)
        count = max(1, int(math.ceil(settings.cross_check_fraction * len(records))))
        chosen = sorted(rng.choice(len(records), size=min(count, len(records)), replace=False).tolist())

        def direct(index: int) -> float:
            return argmin_of(problem, records[index].lam, grid, objective='pa', tie_tol=tie_tol).value

        for index, value in zip(chosen, parallel_map(direct, chosen)):
            records[index].pa_min_value = value
            gap = abs(value - records[index].min_value)
            if gap > CROSS_CHECK_TOL * (1.0 + abs(value)):
                failures.append({'index': index, 'lambda': list(records[index].lam.weights),
                                 'weighted_min': records[index].min_value, 'pa_min': value})
        if failures:
            logger.warning("cross_check_failed", count=len(failures))

    threshold = jump_threshold if jump_threshold is not None else settings.jump_threshold_fraction * grid.max_extent
    jumps = detect_jumps(records, threshold)
    logger.info("argmin_path_tracked", records=len(records), jumps=len(jumps), threshold=threshold)
    return ArgminPath(records, jumps, failures)


def _split_branches(points: np.ndarray, before: np.ndarray, after: np.ndarray):
    """按到前后邻居集合的距离把多值记录分成左右两支"""
    to_before = np.array([np.min(np.linalg.norm(before - p, axis=1)) for p in points])
    to_after = np.array([np.min(np.linalg.norm(after - p, axis=1)) for p in points])
    left = points[to_before <= to_after]
    right = points[to_before > to_after]
    if len(left) == 0 or len(right) == 0:
        return before, after
    return left, right


def _midpoint(a: SimplexWeight, b: SimplexWeight) -> SimplexWeight:
    mid = 0.5 * (a.as_array() + b.as_array())
    return SimplexWeight(tuple(float(w) for w in mid / mid.sum()))


def detect_jumps(records: Sequence[ArgminRecord], threshold: float) -> List[JumpEvent]:
    """
    相邻记录极小点集合的 Hausdorff 距离超过阈值即为跳变。

    连续的跳变合并成一个事件：若中间经过多值记录，λ* 取该记录的权重，
    幅度取它左右两支之间的距离；否则 λ* 取两端的中点。
    """
    flagged = [hausdorff_distance(records[k].argmin, records[k + 1].argmin) > threshold
               for k in range(len(records) - 1)]
    events = []
    k = 0
    while k < len(flagged):
        if not flagged[k]:
            k += 1
            continue
        start = k
        while k < len(flagged) and flagged[k]:
            k += 1
        first, last = records[start], records[k]
        interior = [i for i in range(start + 1, k) if records[i].multivalued]
        if interior:
            centre = records[interior[len(interior) // 2]]
            left, right = _split_branches(centre.argmin, first.argmin, last.argmin)
            event = JumpEvent(centre.lam, centre.t, left, right, hausdorff_distance(left, right),
                              interior[len(interior) // 2])
        else:
            event = JumpEvent(_midpoint(first.lam, last.lam), 0.5 * (first.t + last.t), first.argmin,
                              last.argmin, hausdorff_distance(first.argmin, last.argmin), start)
        logger.debug("jump_detected", t_star=event.t_star, magnitude=event.magnitude)
        events.append(event)
    return events


@dataclass
class CriticalPoint:
    point: float
    classification: str
    value: float

    def as_tuple(self) -> Tuple[float, str]:
        return self.point, self.classification


def critical_points_1d(problem: ProxAverageProblem, lam, grid: Optional[GridSpec] = None) -> List[CriticalPoint]:
    """
    一维 Σλ_i e_r f_i 的临界点：数值导数变号处二分到 1e-10，
    按二阶差分（步长 1e-4）分为 min / max / saddle-flat。
    """
    if problem.dimension != 1:
        raise DimensionMismatchError("critical_points_1d 只支持一维问题", expected=1, actual=problem.dimension)
    weights = SimplexWeight.of(lam)
    grid = grid or problem.inner_grid
    h = GRADIENT_STEP

    def value(x):
        return np.asarray(weighted_envelope(problem, np.atleast_1d(x), weights), dtype=float)

    def derivative(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return (value(x + h) - value(x - h)) / (2.0 * h)

    xs = grid.axes[0]
    d = derivative(xs)
    roots: List[float] = []
    for j in range(len(xs) - 1):
        if d[j] == 0.0:
            roots.append(float(xs[j]))
        elif d[j] * d[j + 1] < 0.0:
            roots.append(bisect(lambda x: float(derivative(x)[0]), xs[j], xs[j + 1], xtol=1e-10))
    if d[-1] == 0.0:
        roots.append(float(xs[-1]))

    unique: List[float] = []
    for root in sorted(roots):
        if not unique or root - unique[-1] > 1e-6:
            unique.append(root)

    step = 1e-4
    points = []
    for root in unique:
        w_mid, w_lo, w_hi = value(np.array([root, root - step, root + step]))
        second = w_lo - 2.0 * w_mid + w_hi
        tol = 1e-10 * (1.0 + abs(w_mid))
        kind = 'min' if second > tol else 'max' if second < -tol else 'saddle-flat'
        points.append(CriticalPoint(root, kind, float(w_mid)))
    return points


def _pa_gradient(problem: ProxAverageProblem, x: np.ndarray, weights: SimplexWeight) -> np.ndarray:
    n = x.size
    h = PA_GRADIENT_STEP
    probes = np.concatenate([x + h * np.eye(n), x - h * np.eye(n)])
    values = np.asarray(pa_values(problem, probes, weights), dtype=float).reshape(-1)
    return (values[:n] - values[n:]) / (2.0 * h)


def verify_limit_critical(problem: ProxAverageProblem, sequence: Sequence, grid: Optional[GridSpec] = None,
                          membership_tol: float = 1e-4, limit_lambda=None) -> CheckReport:
    """
    x_k ∈ argmin PA(·, λ_k) 且序列收敛时，极限点处 |∇PA(x̄, λ̄)| <= 1e-4。

    Args:
        sequence: [(x_k, λ_k), ...]；最后一项的 x_k 作为 x̄ 的估计
        limit_lambda: 极限权重 λ̄；缺省时取最后一项的 λ_k

    Raises:
        InputError: 某个 x_k 不在对应的极小点集合里
        ConvergenceInputError: 序列末端不满足 Cauchy 条件
    """
    if not sequence:
        raise ConvergenceInputError("序列不能为空")
    settings = get_settings()
    terms = [(np.atleast_1d(np.asarray(x, dtype=float)), SimplexWeight.of(lam)) for x, lam in sequence]

    for k, (x, lam) in enumerate(terms):
        found = argmin_of(problem, lam, grid, objective='weighted')
        distance = float(np.min(np.linalg.norm(found.points - x, axis=1)))
        if distance > membership_tol:
            raise InputError(f"第 {k + 1} 项不是 PA(·, λ_k) 的极小点（距离 {distance:.3g}）", parameter="sequence")

    if len(terms) >= 2:
        (x_prev, lam_prev), (x_last, lam_last) = terms[-2], terms[-1]
        gap = max(float(np.linalg.norm(x_last - x_prev)),
                  float(np.linalg.norm(lam_last.as_array() - lam_prev.as_array())))
        if gap > settings.paths.cauchy_tol:
            raise ConvergenceInputError(f"序列末端相邻两项相差 {gap:.3g}，超过 {settings.paths.cauchy_tol}",
                                        gap=gap)

    x_bar, lam_last = terms[-1]
    lam_bar = SimplexWeight.of(limit_lambda) if limit_lambda is not None else lam_last
    if lam_bar.m != lam_last.m:
        raise DimensionMismatchError("极限权重维度不一致", expected=lam_last.m, actual=lam_bar.m)
    lambda_gap = float(np.linalg.norm(lam_bar.as_array() - lam_last.as_array()))
    gradient = _pa_gradient(problem, x_bar, lam_bar)
    norm = float(np.linalg.norm(gradient))
    report = CheckReport("limit_critical", samples_tested=len(terms), estimate=norm,
                         note=f"gradient of PA at the limit point; |lambda_last - lambda_bar| = {lambda_gap:.3g}")
    if norm > settings.checks.gradient_tolerance:
        report.add_violation(settings.checks.gradient_tolerance - norm, x=x_bar, **{'lambda': lam_bar})
    return report
