#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
正则性与稳定性的采样检查

采样只能证伪：报告里的 "sufficient condition verified" 表示在采样点上
充分条件成立，而不是证明了定理的假设。所有报告都记录随机种子。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .config import get_settings
from .exceptions import InputError
from .funcspace import (
    GridSpec, MaxQuadFunction, SimplexWeight, active_gradients, is_shift_convex,
    midpoint_convexity_scan, prox_threshold, simplex_path,
)
from .logging_system import get_structlog_logger, performance_logger
from .moreau import envelope_values, prox_many, prox_selection_exact_1d, uses_exact_path
from .performance import parallel_map
from .proxavg import (
    ProxAverageProblem, argmin_equivalence, delta_eval, envelope_of, inner_function, pa_values,
)

logger = get_structlog_logger(__name__)

MAX_REPORTED_VIOLATIONS = 50
NOTE_SUFFICIENT = "sufficient condition verified"
NOTE_SAMPLED = "sampled verdict"
NOTE_VERTEX = "vertex: delta(lambda)=0"


@dataclass
class CheckReport:
    """单项检查的结果；passed 当且仅当没有违反"""

    name: str
    samples_tested: int = 0
    violations: List[Dict[str, Any]] = field(default_factory=list)
    estimate: Optional[float] = None
    seed: Optional[int] = None
    note: str = ""
    violation_count: int = 0

    @property
    def passed(self) -> bool:
        return self.violation_count == 0 and not self.violations

    def add_violation(self, margin: float, **witness) -> None:
        self.violation_count += 1
        entry = {key: _plain(value) for key, value in witness.items()}
        entry['margin'] = float(margin)
        self.violations.append(entry)
        if len(self.violations) > MAX_REPORTED_VIOLATIONS:
            self.violations.sort(key=lambda v: v['margin'])
            del self.violations[MAX_REPORTED_VIOLATIONS:]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'name': self.name,
            'passed': self.passed,
            'samples': self.samples_tested,
            'violations': sorted(self.violations, key=lambda v: v['margin']),
            'violation_count': self.violation_count,
            'seed': self.seed,
            'note': self.note,
        }
        if self.estimate is not None:
            data['estimate'] = self.estimate
        return data


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, SimplexWeight):
        return list(value.weights)
    return value


def _ball_samples(rng: np.random.Generator, centre: np.ndarray, radius: float, count: int) -> np.ndarray:
    """半径 radius 的球内均匀采样"""
    n = centre.size
    directions = rng.normal(size=(count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=count) ** (1.0 / n)
    return centre + directions * radii[:, None]


def _quadratic_minorization_margins(fx, fxp, v, x, xp, r):
    """f(x') - f(x) - <v, x'-x> + (r/2)|x'-x|²，形状 (N, N')"""
    diff = xp[None, :, :] - x[:, None, :]
    return (fxp[None, :] - fx[:, None] - np.einsum('in,ijn->ij', v, diff)
            + 0.5 * r * np.sum(diff * diff, axis=2))


# ---------------------------------------------------------------------------
# 近端正则性
# ---------------------------------------------------------------------------

def check_prox_inequality(f: MaxQuadFunction, x_bar, eps: float, r: float,
                          sample_count: int = 201, seed: int = 0) -> CheckReport:
    """
    在 x̄ 的 ε 邻域里检查 f(x') >= f(x) + <v, x'-x> - (r/2)|x'-x|²，
    v 取 x 处所有活跃片的梯度。一维时对 sample_count² 个点对穷举，
    高维时在球内均匀采样。
    """
    tol = get_settings().checks.violation_tolerance
    centre = np.atleast_1d(np.asarray(x_bar, dtype=float))
    report = CheckReport("prox_inequality", seed=seed, note=NOTE_SUFFICIENT)
    if f.dimension == 1:
        points = np.linspace(centre[0] - eps, centre[0] + eps, sample_count)[:, None]
    else:
        points = _ball_samples(np.random.default_rng(seed), centre, eps, sample_count)
    values = np.asarray(f.evaluate(points), dtype=float).reshape(-1)
    gradients, active = active_gradients(f, points)
    finite = np.isfinite(values)

    for j in range(len(f.pieces)):
        rows = np.nonzero(active[j] & finite)[0]
        if rows.size == 0:
            continue
        margins = _quadratic_minorization_margins(values[rows], values, gradients[j, rows], points[rows],
                                                  points, r)
        valid = np.isfinite(margins)
        report.samples_tested += int(valid.sum())
        bad = valid & (margins < -tol * (1.0 + np.abs(values[rows]))[:, None])
        for a, b in zip(*np.nonzero(bad)):
            report.add_violation(margins[a, b], x=points[rows[a]], xp=points[b], piece=int(j))
    logger.debug("prox_inequality_checked", r=r, eps=eps, violations=report.violation_count)
    return report


def _lambda_samples(rng: np.random.Generator, centre: SimplexWeight, radius: float, count: int) -> List[SimplexWeight]:
    """|λ - λ̄| < radius 的单纯形采样：λ = (1-t)λ̄ + tμ，μ 服从 Dirichlet"""
    base = centre.as_array()
    if centre.m == 1:
        return [centre] * count
    samples = []
    for _ in range(count):
        mu = rng.dirichlet(np.ones(centre.m))
        distance = float(np.linalg.norm(mu - base))
        t_max = 1.0 if distance == 0.0 else min(1.0, 0.999999 * radius / distance)
        t = rng.uniform() * t_max
        weights = np.clip((1.0 - t) * base + t * mu, 0.0, None)
        weights /= weights.sum()
        samples.append(SimplexWeight(tuple(float(w) for w in weights)))
    return samples


def _central_gradient(func, points: np.ndarray, h: float) -> np.ndarray:
    """(N, n) 点阵上的中心差分梯度"""
    n = points.shape[1]
    grads = np.empty_like(points)
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        grads[:, k] = (np.asarray(func(points + step)).reshape(-1)
                       - np.asarray(func(points - step)).reshape(-1)) / (2.0 * h)
    return grads


def check_para_prox_inequality(problem: ProxAverageProblem, x_bar, lam_bar, eps: float, r: float,
                               sample_count: int = 16, seed: int = 0, points_per_sample: int = 21) -> CheckReport:
    """
    参数化近端正则性：对 |λ - λ̄| < ε 的采样 λ 和 x̄ 的 ε 邻域内的点对，检查
    F(x', λ) >= F(x, λ) + <v, x'-x> - (r/2)|x'-x|²，v 为 ∇_x F(x, λ) 的中心差分。
    """
    settings = get_settings().checks
    rng = np.random.default_rng(seed)
    centre = np.atleast_1d(np.asarray(x_bar, dtype=float))
    report = CheckReport("para_prox_inequality", seed=seed, note=NOTE_SUFFICIENT)
    slack = problem.interpolation_slack

    for lam in _lambda_samples(rng, SimplexWeight.of(lam_bar), eps, sample_count):
        F = inner_function(problem, lam)
        if problem.dimension == 1:
            points = np.linspace(centre[0] - eps, centre[0] + eps, points_per_sample)[:, None]
        else:
            points = _ball_samples(rng, centre, eps, points_per_sample)
        values = np.asarray(F(points), dtype=float).reshape(-1)
        grads = _central_gradient(F, points, 1e-6)
        margins = _quadratic_minorization_margins(values, values, grads, points, points, r)
        np.fill_diagonal(margins, 0.0)
        report.samples_tested += points_per_sample * (points_per_sample - 1)
        bad = margins < -(settings.violation_tolerance * (1.0 + np.abs(values))[:, None] + slack)
        for a, b in zip(*np.nonzero(bad)):
            report.add_violation(margins[a, b], x=points[a], xp=points[b], **{'lambda': lam})
    logger.debug("para_prox_inequality_checked", r=r, eps=eps, violations=report.violation_count)
    return report


# ---------------------------------------------------------------------------
# 平移凸性
# ---------------------------------------------------------------------------

def _shifted_convexity_scan(report: CheckReport, values: np.ndarray, grid: GridSpec, shift: float,
                            x_bar: np.ndarray, lam: SimplexWeight, slack: float) -> None:
    points = grid.points()
    shifted = values + 0.5 * shift * np.sum((points - x_bar) ** 2, axis=1)
    rel_tol = get_settings().checks.convexity_tolerance
    report.samples_tested += grid.size
    for index, margin in midpoint_convexity_scan(shifted, grid, rel_tol):
        if margin < -slack - rel_tol * (1.0 + abs(float(shifted.reshape(grid.shape)[index]))):
            flat = int(np.ravel_multi_index(index, grid.shape))
            report.add_violation(margin, x=points[flat], x_bar=x_bar, **{'lambda': lam})


def check_shifted_convexity(problem: ProxAverageProblem, lam, x_bar, grid: Optional[GridSpec] = None) -> CheckReport:
    """PA(·, λ) + ((r+δ(λ))/2)|· - x̄|² 在网格相邻三点上的中点凸性"""
    weights = SimplexWeight.of(lam)
    grid = grid or problem.inner_grid
    delta = delta_eval(problem.delta, weights)
    report = CheckReport("shifted_convexity", note=NOTE_VERTEX if weights.is_vertex else NOTE_SAMPLED)
    values = np.asarray(pa_values(problem, grid.points(), weights), dtype=float).reshape(-1)
    centre = np.atleast_1d(np.asarray(x_bar, dtype=float))
    _shifted_convexity_scan(report, values, grid, problem.r + delta, centre, weights, problem.interpolation_slack)
    return report


# ---------------------------------------------------------------------------
# Lipschitz 估计
# ---------------------------------------------------------------------------

def _prox_points(problem: ProxAverageProblem, index: int, points: np.ndarray):
    """f_i 的近端点（每点取一个）及多值掩码"""
    f = problem.functions[index]
    if uses_exact_path(f, problem.r):
        _, selected, multivalued = prox_selection_exact_1d(f, problem.r, points[:, 0])
        return selected[:, None], multivalued
    results = prox_many(f, problem.r, points, problem.outer_grid)
    return (np.array([res.minimizers[0] for res in results]),
            np.array([res.multivalued for res in results]))


def estimate_prox_map_lipschitz(problem: ProxAverageProblem, lam, grid: Optional[GridSpec] = None) -> CheckReport:
    """
    估计 Lip(Σλ_i P_r f_i - I)：网格上相邻点的最大差商，近端映射多值的点排除在外。
    估计值不超过 1 + slack 时通过。
    """
    weights = SimplexWeight.of(lam)
    grid = grid or problem.inner_grid
    points = grid.points()
    combined = -points.copy()
    excluded = np.zeros(len(points), dtype=bool)
    for i, w in enumerate(weights):
        if w == 0.0:
            continue
        selected, multivalued = _prox_points(problem, i, points)
        combined += w * selected
        excluded |= multivalued

    shaped = combined.reshape(grid.shape + (grid.dimension,))
    mask = excluded.reshape(grid.shape)
    estimate = 0.0
    pairs = 0
    for axis, h in enumerate(grid.spacing):
        n_axis = grid.shape[axis]
        lo = np.take(shaped, np.arange(0, n_axis - 1), axis=axis)
        hi = np.take(shaped, np.arange(1, n_axis), axis=axis)
        valid = ~(np.take(mask, np.arange(0, n_axis - 1), axis=axis) | np.take(mask, np.arange(1, n_axis), axis=axis))
        quotients = np.linalg.norm(hi - lo, axis=-1) / h
        pairs += int(valid.sum())
        if valid.any():
            estimate = max(estimate, float(quotients[valid].max()))

    bound = 1.0 + get_settings().checks.lipschitz_slack
    report = CheckReport("prox_map_lipschitz", samples_tested=pairs, estimate=estimate, note=NOTE_SUFFICIENT)
    if estimate > bound:
        report.add_violation(bound - estimate, **{'lambda': weights})
    excluded_count = int(excluded.sum())
    if excluded_count:
        report.note += f"; {excluded_count} multivalued points excluded"
    logger.debug("prox_map_lipschitz_estimated", weights=weights.weights, estimate=estimate)
    return report


def _tangent_perturbation(rng: np.random.Generator, centre: np.ndarray, radius: float) -> np.ndarray:
    """在单纯形切空间中取距离 [radius/2, radius] 的扰动，并保持在单纯形内"""
    direction = rng.normal(size=centre.size)
    direction -= direction.mean()
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        direction = np.zeros(centre.size)
        direction[0], direction[1] = 1.0, -1.0
        norm = math.sqrt(2.0)
    direction /= norm
    step = radius * rng.uniform(0.5, 1.0)
    negative = direction < 0
    if negative.any():
        step = min(step, float(np.min(centre[negative] / -direction[negative])))
    return centre + step * direction


def _pa_gradient(problem: ProxAverageProblem, x: np.ndarray, weights: SimplexWeight, h: float = 1e-5) -> np.ndarray:
    n = x.size
    probes = np.concatenate([x + h * np.eye(n), x - h * np.eye(n)])
    values = np.asarray(pa_values(problem, probes, weights), dtype=float).reshape(-1)
    return (values[:n] - values[n:]) / (2.0 * h)


def _gradient_ratio_estimate(problem, x, centre: SimplexWeight, radius, sample_count, rng) -> float:
    base = _pa_gradient(problem, x, centre)
    lam_samples = []
    for _ in range(sample_count):
        perturbed = np.clip(_tangent_perturbation(rng, centre.as_array(), radius), 0.0, None)
        perturbed /= perturbed.sum()
        lam_samples.append(SimplexWeight(tuple(float(w) for w in perturbed)))

    def ratio(lam: SimplexWeight) -> float:
        distance = float(np.linalg.norm(lam.as_array() - centre.as_array()))
        if distance == 0.0:
            return 0.0
        return float(np.linalg.norm(_pa_gradient(problem, x, lam) - base)) / distance

    return max(parallel_map(ratio, lam_samples), default=0.0)


def check_gradient_lambda_lipschitz(problem: ProxAverageProblem, x, lam_bar, perturbation_radius: float = 0.05,
                                    sample_count: int = 8, seed: int = 0) -> CheckReport:
    """
    估计 λ -> ∇_x PA(x, λ) 在 λ̄ 附近的 Lipschitz 模：
    max |∇PA(x,λ) - ∇PA(x,λ̄)| / |λ - λ̄|。估计有限且把半径减半后不超过
    两倍（加 slack）时视为稳定。

    Raises:
        InputError: δ(λ̄) = 0
    """
    centre = SimplexWeight.of(lam_bar)
    report = CheckReport("gradient_lambda_lipschitz", seed=seed, note=NOTE_SUFFICIENT)
    if centre.m == 1:
        report.estimate = 0.0
        report.note = "single function: PA independent of lambda"
        return report
    if delta_eval(problem.delta, centre) <= 0.0:
        raise InputError("gradient-in-lambda check requires delta(lambda_bar) > 0", parameter="lambda")

    point = np.atleast_1d(np.asarray(x, dtype=float))
    rng = np.random.default_rng(seed)
    estimate = _gradient_ratio_estimate(problem, point, centre, perturbation_radius, sample_count, rng)
    halved = _gradient_ratio_estimate(problem, point, centre, 0.5 * perturbation_radius, sample_count, rng)
    report.samples_tested = 2 * sample_count
    report.estimate = estimate
    slack = get_settings().checks.lipschitz_slack
    if not (math.isfinite(estimate) and math.isfinite(halved)) or halved > 2.0 * estimate + slack:
        report.add_violation(2.0 * estimate + slack - halved, x=point, **{'lambda': centre})
    report.note += f"; estimate at half radius {halved:.6g}"
    return report


# ---------------------------------------------------------------------------
# 包络性质
# ---------------------------------------------------------------------------

def check_prox_threshold(problem: ProxAverageProblem) -> CheckReport:
    report = CheckReport("prox_threshold", samples_tested=problem.m)
    for i, f in enumerate(problem.functions):
        bound = prox_threshold(f)
        if not problem.r > bound:
            report.add_violation(problem.r - bound, function=i + 1, threshold=bound)
    return report


def check_majorization(problem: ProxAverageProblem, grid: Optional[GridSpec] = None) -> CheckReport:
    """e_r f_i(x) <= f_i(x)"""
    grid = grid or problem.inner_grid
    points = grid.points()
    tol = get_settings().checks.violation_tolerance
    report = CheckReport("majorization")
    for i, f in enumerate(problem.functions):
        fx = np.asarray(f.evaluate(points), dtype=float).reshape(-1)
        ex = envelope_of(problem, i, points)
        finite = np.isfinite(fx)
        report.samples_tested += int(finite.sum())
        gap = np.where(finite, fx - ex, 0.0)
        for k in np.nonzero(gap < -(tol * (1.0 + np.abs(np.where(finite, fx, 0.0)))
                                    + problem.interpolation_slack))[0]:
            report.add_violation(gap[k], function=i + 1, x=points[k])
    return report


def check_r_monotonicity(problem: ProxAverageProblem, grid: Optional[GridSpec] = None,
                         factor: float = 1.5) -> CheckReport:
    """r1 <= r2 时 e_{r1} f <= e_{r2} f"""
    grid = grid or problem.inner_grid
    points = grid.points()
    tol = get_settings().checks.violation_tolerance
    report = CheckReport("r_monotonicity", note=f"r2 = {factor} r")
    for i, f in enumerate(problem.functions):
        low = envelope_values(f, problem.r, points, problem.outer_grid)
        high = envelope_values(f, factor * problem.r, points, problem.outer_grid)
        report.samples_tested += len(points)
        gap = high - low
        for k in np.nonzero(gap < -tol * (1.0 + np.abs(low)))[0]:
            report.add_violation(gap[k], function=i + 1, x=points[k])
    return report


def check_gradient_identity(problem: ProxAverageProblem, samples: int = 100, seed: int = 0,
                            h: float = 1e-5) -> CheckReport:
    """
    ∇e_r f_i(x̄) = r(x̄ - P_r f_i(x̄)) 与包络中心差分的相对误差。
    近端映射多值或 x̄ ± h 处跳变的点跳过。
    """
    rng = np.random.default_rng(seed)
    grid = problem.inner_grid
    lower, upper = np.asarray(grid.lower), np.asarray(grid.upper)
    margin = 0.05 * (upper - lower)
    tolerance = get_settings().checks.gradient_tolerance
    report = CheckReport("gradient_identity", seed=seed)
    n = problem.dimension
    skipped = 0

    for i, f in enumerate(problem.functions):
        xs = rng.uniform(lower + margin, upper - margin, size=(samples, n))
        offsets = np.concatenate([np.zeros((1, n)), h * np.eye(n), -h * np.eye(n)])
        probes = (xs[:, None, :] + offsets[None, :, :]).reshape(-1, n)
        results = prox_many(f, problem.r, probes, problem.outer_grid)
        stride = 1 + 2 * n
        for s in range(samples):
            group = results[s * stride:(s + 1) * stride]
            centre = group[0]
            if any(res.multivalued for res in group):
                skipped += 1
                continue
            jumps = [np.max(np.abs(res.minimizers[0] - centre.minimizers[0])) for res in group[1:]]
            if max(jumps) > 100.0 * h * max(1.0, problem.r):
                skipped += 1
                continue
            analytic = problem.r * (xs[s] - centre.minimizers[0])
            numeric = np.array([(group[1 + k].value - group[1 + n + k].value) / (2.0 * h) for k in range(n)])
            error = float(np.max(np.abs(analytic - numeric)) / max(1.0, float(np.max(np.abs(analytic)))))
            report.samples_tested += 1
            if error > tolerance:
                report.add_violation(tolerance - error, function=i + 1, x=xs[s])
    if skipped:
        report.note = f"{skipped} points skipped (multivalued or near a prox jump)"
    return report


def check_vertex_recovery(problem: ProxAverageProblem, grid: Optional[GridSpec] = None,
                          tol: float = 1e-5) -> CheckReport:
    """f_i + (r/2)q 凸时 PA(·, e_i) = f_i"""
    grid = grid or problem.inner_grid
    points = grid.points()
    report = CheckReport("vertex_recovery")
    skipped = []
    estimate = 0.0
    for i, f in enumerate(problem.functions):
        if not is_shift_convex(f, problem.r, grid):
            skipped.append(i + 1)
            continue
        fx = np.asarray(f.evaluate(points), dtype=float).reshape(-1)
        pa = np.asarray(pa_values(problem, points, SimplexWeight.vertex(problem.m, i)), dtype=float).reshape(-1)
        finite = np.isfinite(fx)
        deviation = np.where(finite, np.abs(pa - fx), 0.0)
        report.samples_tested += int(finite.sum())
        estimate = max(estimate, float(deviation.max(initial=0.0)))
        worst = int(np.argmax(deviation))
        if deviation[worst] > tol + problem.interpolation_slack:
            report.add_violation(tol - deviation[worst], function=i + 1, x=points[worst])
    report.estimate = estimate
    if skipped:
        report.note = f"functions {skipped} skipped: f + (r/2)q not convex"
    return report


# ---------------------------------------------------------------------------
# 验证套件
# ---------------------------------------------------------------------------

@dataclass
class SuiteReport:
    seed: int
    checks: List[CheckReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {'passed': self.passed, 'seed': self.seed, 'checks': [c.to_dict() for c in self.checks]}


def interior_weights(m: int, count: int = 9, seed: int = 0) -> List[SimplexWeight]:
    """套件用的内部 λ：m=2 时为边上等距点，m>=3 时为 Dirichlet 采样，m=1 时为唯一顶点"""
    if m == 1:
        return [SimplexWeight((1.0,))]
    if m == 2:
        return [SimplexWeight((1.0 - t, t)) for t in np.linspace(0.0, 1.0, count + 2)[1:-1]]
    rng = np.random.default_rng(seed)
    return [SimplexWeight(tuple(float(w) for w in rng.dirichlet(np.ones(m)))) for _ in range(count)]


def edge_weights(m: int, steps: int = 21) -> List[SimplexWeight]:
    if m == 1:
        return [SimplexWeight((1.0,))]
    return simplex_path(SimplexWeight.vertex(m, 0), SimplexWeight.vertex(m, 1), steps)


def _suite_shifted_convexity(problem: ProxAverageProblem, weights: Sequence[SimplexWeight], shifts: np.ndarray,
                             grid: GridSpec) -> CheckReport:
    report = CheckReport("shifted_convexity", note=NOTE_SAMPLED)
    curves = parallel_map(
        lambda lam: np.asarray(pa_values(problem, grid.points(), lam), dtype=float).reshape(-1), weights)
    for lam, values in zip(weights, curves):
        if lam.is_vertex:
            report.note = f"{NOTE_SAMPLED}; {NOTE_VERTEX}"
        s = problem.r + delta_eval(problem.delta, lam)
        for x_bar in shifts:
            _shifted_convexity_scan(report, values, grid, s, x_bar, lam, problem.interpolation_slack)
    return report


def _suite_lipschitz(problem: ProxAverageProblem, weights: Sequence[SimplexWeight], grid: GridSpec) -> CheckReport:
    report = CheckReport("prox_map_lipschitz", note=NOTE_SUFFICIENT, estimate=0.0)
    for sub in parallel_map(lambda lam: estimate_prox_map_lipschitz(problem, lam, grid), weights):
        report.samples_tested += sub.samples_tested
        report.estimate = max(report.estimate, sub.estimate or 0.0)
        for violation in sub.violations:
            report.add_violation(violation.pop('margin'), **violation)
    return report


def _suite_argmin_equivalence(problem: ProxAverageProblem, weights: Sequence[SimplexWeight],
                              grid: GridSpec, tol: float = 1e-4) -> CheckReport:
    report = CheckReport("argmin_equivalence", note="argmin PA vs argmin of weighted envelopes", estimate=0.0)
    for eq in parallel_map(lambda lam: argmin_equivalence(problem, lam, grid, tol), weights):
        report.samples_tested += 1
        report.estimate = max(report.estimate, eq.distance)
        if not eq.agree:
            report.add_violation(tol - eq.distance, **{'lambda': list(eq.lam)},
                                 argmin_pa=eq.argmin_pa, argmin_weighted=eq.argmin_weighted)
    return report


def _suite_para_prox(problem: ProxAverageProblem, seed: int) -> CheckReport:
    grid = problem.inner_grid
    lower, upper = np.asarray(grid.lower), np.asarray(grid.upper)
    eps = 0.05 * grid.max_extent
    rng = np.random.default_rng(seed)
    r_check = get_settings().checks.para_prox_r_factor * problem.r
    centre = SimplexWeight.centroid(problem.m)
    report = CheckReport("para_prox_inequality", seed=seed, note=f"{NOTE_SUFFICIENT}; r = {r_check:.6g}")
    for x_bar in rng.uniform(lower + eps, upper - eps, size=(3, problem.dimension)):
        sub = check_para_prox_inequality(problem, x_bar, centre, eps, r_check, sample_count=8,
                                         seed=int(rng.integers(2 ** 31)))
        report.samples_tested += sub.samples_tested
        for violation in sub.violations:
            report.add_violation(violation.pop('margin'), **violation)
    return report


@performance_logger("verification_suite")
def run_verification_suite(problem: ProxAverageProblem, seed: int = 0,
                           grid: Optional[GridSpec] = None) -> SuiteReport:
    """
    依次运行：阈值、包络上界、r 单调性、梯度恒等式、顶点恢复、平移凸性、
    近端映射 Lipschitz 估计、极小点等价、参数化近端正则性。阈值检查失败时直接返回。
    """
    grid = grid or problem.inner_grid
    suite = SuiteReport(seed=seed)
    threshold = check_prox_threshold(problem)
    suite.checks.append(threshold)
    if not threshold.passed:
        logger.warning("verification_stopped", reason="prox threshold", r=problem.r)
        return suite

    rng = np.random.default_rng(seed)
    lower, upper = np.asarray(grid.lower), np.asarray(grid.upper)
    shifts = rng.uniform(lower, upper, size=(5, problem.dimension))
    interior = interior_weights(problem.m, seed=seed)

    suite.checks.append(check_majorization(problem, grid))
    suite.checks.append(check_r_monotonicity(problem, grid))
    suite.checks.append(check_gradient_identity(problem, seed=seed))
    suite.checks.append(check_vertex_recovery(problem, grid))
    suite.checks.append(_suite_shifted_convexity(problem, interior, shifts, grid))
    suite.checks.append(_suite_lipschitz(problem, interior, grid))
    suite.checks.append(_suite_argmin_equivalence(problem, edge_weights(problem.m), grid))
    suite.checks.append(_suite_para_prox(problem, seed))

    for check in suite.checks:
        logger.info("check_finished", check=check.name, passed=check.passed, samples=check.samples_tested)
    return suite
