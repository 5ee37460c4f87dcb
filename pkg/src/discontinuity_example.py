#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
极小点不连续的例子

g_0(x) = max{-x, -(1/2)(x-1)² + 1/2, x - 2 + ε}
g_1(x) = max{-x + ε, -(1/2)(x-1)² + 1/2, x - 2}

两者关于 x = 1 镜像对称（g_1(x) = g_0(2 - x)），g_i + (1/2)q 凸。
r > 1 时近端映射与包络有五段闭式；r = 2、ε = 1/2 时加权包络
G(x, w) = w e_2 g_0(x) + (1 - w) e_2 g_1(x) 有九段闭式，在 w = 1/2 处
两个极小点并列，极小点映射在此处跳变。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InputError, ProxParameterError
from .funcspace import GridSpec, MaxQuadFunction, QuadraticPiece, SimplexWeight, simplex_path
from .logging_system import get_structlog_logger
from .minpath import ArgminPath, track_argmin
from .proxavg import ProxAverageProblem

logger = get_structlog_logger(__name__)

SQRT3 = math.sqrt(3.0)
EXAMPLE_GRID = GridSpec((-1.0,), (3.0,), (2001,))
FIGURE_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class ExampleParams:
    """ε 及由它导出的常数；k + l = 2"""

    eps: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise InputError(f"ε 必须在 (0, 1] 内: {self.eps}", parameter="eps")

    @property
    def k(self) -> float:
        return 2.0 - math.sqrt(4.0 - 2.0 * self.eps)

    @property
    def l(self) -> float:
        return math.sqrt(4.0 - 2.0 * self.eps)

    def offsets(self, index: int) -> Tuple[float, float]:
        """(δ_i, ε_i)：左、右线性片的常数项偏移"""
        _check_index(index)
        return (0.0, self.eps) if index == 0 else (self.eps, 0.0)

    def kinks(self, index: int) -> Tuple[float, float]:
        """(k_i, l_i)：驼峰与左、右线性片的交点"""
        delta_i, eps_i = self.offsets(index)
        return 2.0 - math.sqrt(4.0 - 2.0 * delta_i), math.sqrt(4.0 - 2.0 * eps_i)


def _check_index(index: int) -> None:
    if index not in (0, 1):
        raise InputError(f"函数下标只能是 0 或 1: {index}", parameter="index")


def _check_r(r: float) -> None:
    if not r > 1.0:
        raise ProxParameterError(f"prox-parameter below threshold: closed forms need r > 1, got {r}",
                                 r=r, bound=1.0)


def _as_points(x_bar) -> Tuple[np.ndarray, bool]:
    return np.atleast_1d(np.asarray(x_bar, dtype=float)), np.ndim(x_bar) == 0


def _as_output(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


def make_g(index: int, eps: float = 0.5) -> MaxQuadFunction:
    """三片函数 g_index"""
    delta_i, eps_i = ExampleParams(eps).offsets(index)
    return MaxQuadFunction(1, (
        QuadraticPiece(0.0, (-1.0,), delta_i),
        QuadraticPiece(-1.0, (1.0,), 0.0),
        QuadraticPiece(0.0, (1.0,), -2.0 + eps_i),
    ))


def _branch_conditions(index: int, r: float, x: np.ndarray, eps: float):
    k_i, l_i = ExampleParams(eps).kinks(index)
    return k_i, l_i, [
        x < k_i - 1.0 / r,
        x <= k_i + (1.0 - k_i) / r,
        x < l_i + (1.0 - l_i) / r,
        x <= l_i + 1.0 / r,
        np.ones_like(x, dtype=bool),
    ]


def prox_g_closed(index: int, r: float, x_bar, eps: float = 0.5):
    """P_r g_index 的五段闭式（r > 1）；分段端点归入靠前的闭区间"""
    _check_r(r)
    x, scalar = _as_points(x_bar)
    k_i, l_i, conditions = _branch_conditions(index, r, x, eps)
    values = np.select(conditions, [
        x + 1.0 / r,
        np.full_like(x, k_i),
        (r * x - 1.0) / (r - 1.0),
        np.full_like(x, l_i),
        x - 1.0 / r,
    ])
    return _as_output(values, scalar)


def envelope_g_closed(index: int, r: float, x_bar, eps: float = 0.5):
    """e_r g_index 的五段闭式（r > 1）"""
    _check_r(r)
    x, scalar = _as_points(x_bar)
    delta_i, eps_i = ExampleParams(eps).offsets(index)
    k_i, l_i, conditions = _branch_conditions(index, r, x, eps)
    values = np.select(conditions, [
        -x - 1.0 / (2.0 * r) + delta_i,
        0.5 * r * x * x - r * k_i * x + 0.5 * (r - 1.0) * k_i * k_i + k_i,
        -(r * x * x - 2.0 * r * x + 1.0) / (2.0 * (r - 1.0)),
        0.5 * r * x * x - r * l_i * x + 0.5 * (r - 1.0) * l_i * l_i + l_i,
        x - 2.0 - 1.0 / (2.0 * r) + eps_i,
    ])
    return _as_output(values, scalar)


# r = 2, ε = 1/2 时 G 的断点
G_BREAKPOINTS = (
    -0.5,
    (3.0 - 2.0 * SQRT3) / 2.0,
    0.5,
    (3.0 - SQRT3) / 2.0,
    (1.0 + SQRT3) / 2.0,
    1.5,
    (1.0 + 2.0 * SQRT3) / 2.0,
    2.5,
)


def G_closed(x_bar, weight):
    """
    G(x̄, w) = w e_2 g_0(x̄) + (1-w) e_2 g_1(x̄)，r = 2、ε = 1/2 的九段闭式。

    Args:
        weight: g_0 的权重 w ∈ [0, 1]
    """
    w = float(weight)
    if not 0.0 <= w <= 1.0:
        raise InputError(f"权重必须在 [0, 1] 内: {w}", parameter="weight")
    x, scalar = _as_points(x_bar)
    k = 2.0 - SQRT3
    hump = -x * x + 2.0 * x - 0.5
    e0_right_kink = x * x - 2.0 * SQRT3 * x + 1.5 + SQRT3
    e1_left_kink = x * x - 2.0 * k * x + 5.5 - 3.0 * SQRT3
    b = G_BREAKPOINTS
    conditions = [
        x < b[0],
        x < b[1],
        x <= b[2],
        x <= b[3],
        x < b[4],
        x < b[5],
        x <= b[6],
        x <= b[7],
        np.ones_like(x, dtype=bool),
    ]
    values = np.select(conditions, [
        -x - 0.5 * w + 0.25,
        w * x * x + (1.0 - w) * (-x + 0.25),
        x * x - 2.0 * (1.0 - w) * k * x + (1.0 - w) * (5.5 - 3.0 * SQRT3),
        w * hump + (1.0 - w) * e1_left_kink,
        hump,
        w * e0_right_kink + (1.0 - w) * hump,
        w * e0_right_kink + (1.0 - w) * (x - 2.0) ** 2,
        w * (x - 1.75) + (1.0 - w) * (x - 2.0) ** 2,
        x - 2.25 + 0.5 * w,
    ])
    return _as_output(values, scalar)


def critical_points_closed(weight: float, eps: float = 0.5) -> Tuple[float, float, float]:
    """G(·, w) 的三个临界点 ((1-w)k, 1, 2 - k w)"""
    w = float(weight)
    if not 0.0 <= w <= 1.0:
        raise InputError(f"权重必须在 [0, 1] 内: {w}", parameter="weight")
    k = ExampleParams(eps).k
    return (1.0 - w) * k, 1.0, 2.0 - k * w


def example_problem(eps: float = 0.5, r: float = 2.0, grid: Optional[GridSpec] = None) -> ProxAverageProblem:
    """f_1 = g_0、f_2 = g_1，内层网格 [-1, 3] × 2001"""
    return ProxAverageProblem.create([make_g(0, eps), make_g(1, eps)], r, inner_grid=grid or EXAMPLE_GRID)


def example_problem_config(eps: float = 0.5, r: float = 2.0, grid: Optional[GridSpec] = None) -> Dict[str, Any]:
    """可写入问题文件的 JSON 字典"""
    return example_problem(eps, r, grid).to_dict()


def figure_data(grid: Optional[GridSpec] = None, weights: Sequence[float] = FIGURE_WEIGHTS,
                eps: float = 0.5, r: float = 2.0) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
    """
    两组曲线：g_0、g_1 本身，以及各权重 w 下的 w e_r g_0 + (1-w) e_r g_1。

    Returns:
        (functions, weighted_envelopes)，每组是列名到数组的字典，含 'x' 列
    """
    grid = grid or EXAMPLE_GRID
    xs = grid.axes[0]
    functions = {'x': xs, 'g0': make_g(0, eps).evaluate(xs), 'g1': make_g(1, eps).evaluate(xs)}
    e0 = envelope_g_closed(0, r, xs, eps)
    e1 = envelope_g_closed(1, r, xs, eps)
    envelopes = {'x': xs}
    for w in weights:
        envelopes[f"w={w:g}"] = w * e0 + (1.0 - w) * e1
    return functions, envelopes


# ---------------------------------------------------------------------------
# 不连续性演示
# ---------------------------------------------------------------------------

@dataclass
class Claim:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'passed': self.passed, 'detail': self.detail}


@dataclass
class DemoReport:
    eps: float
    r: float
    steps: int
    path: ArgminPath
    claims: List[Claim] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(claim.passed for claim in self.claims)

    @property
    def failed_claims(self) -> List[str]:
        return [claim.name for claim in self.claims if not claim.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'eps': self.eps,
            'r': self.r,
            'steps': self.steps,
            'claims': [c.to_dict() for c in self.claims],
            'jumps': [j.to_dict() for j in self.path.jumps],
        }


def run_discontinuity_demo(steps: int = 101, eps: float = 0.5, r: float = 2.0,
                           grid: Optional[GridSpec] = None) -> DemoReport:
    """
    在边 (1,0) -> (0,1) 上跟踪极小点，检查：只有一次跳变、位于 w = 1/2（误差一个步长）、
    w = 1/2 处两个极小点及共同最小值、两侧分支与临界点闭式一致、跳变幅度。
    """
    params = ExampleParams(eps)
    problem = example_problem(eps, r, grid)
    path = simplex_path(SimplexWeight((1.0, 0.0)), SimplexWeight((0.0, 1.0)), steps)
    tracked = track_argmin(problem, path)
    step = 1.0 / (steps - 1)
    report = DemoReport(eps, r, steps, tracked)
    claims = report.claims

    jumps = tracked.jumps
    claims.append(Claim("single_jump", len(jumps) == 1, f"{len(jumps)} jumps detected"))
    if jumps:
        w_star = jumps[0].lam_star[0]
        claims.append(Claim("jump_location", abs(w_star - 0.5) <= step + 1e-12,
                            f"jump at weight {w_star:.6g}, step {step:.3g}"))

    x1, _, x3 = critical_points_closed(0.5, eps)
    half = [rec for rec in tracked.records if abs(rec.lam[0] - 0.5) <= 1e-12]
    if half:
        record = half[0]
        found = np.sort(record.argmin[:, 0])
        expected = np.array([x1, x3])
        two = len(found) == 2 and bool(np.all(np.abs(found - expected) <= 1e-4))
        claims.append(Claim("two_minimizers_at_half", two, f"argmin {found.tolist()}"))
        common = 0.5 * envelope_g_closed(0, r, x1, eps) + 0.5 * envelope_g_closed(1, r, x1, eps)
        claims.append(Claim("common_value", abs(record.min_value - common) <= 1e-6,
                            f"min value {record.min_value:.12g}, expected {common:.12g}"))
    else:
        claims.append(Claim("two_minimizers_at_half", True, "no record at weight 1/2"))

    if eps == 0.5:
        claims.append(_branch_claim(tracked, eps))

    if jumps:
        tolerance = 1e-3 + (0.0 if half else params.k * step)
        magnitude = jumps[0].magnitude
        claims.append(Claim("jump_magnitude", abs(magnitude - (x3 - x1)) <= tolerance,
                            f"magnitude {magnitude:.9g}, expected {x3 - x1:.9g}"))

    logger.info("discontinuity_demo_finished", passed=report.passed, failed=report.failed_claims)
    return report


def _branch_claim(tracked: ArgminPath, eps: float) -> Claim:
    """单值记录的极小点落在某个临界点闭式上，且 w = 1/2 两侧各自取同一分支"""
    sides: Dict[str, set] = {'below': set(), 'above': set()}
    worst = 0.0
    for record in tracked.records:
        w = record.lam[0]
        if record.multivalued or abs(w - 0.5) <= 1e-12:
            continue
        x1, _, x3 = critical_points_closed(w, eps)
        point = float(record.argmin[0, 0])
        branch = 'x1' if abs(point - x1) <= abs(point - x3) else 'x3'
        worst = max(worst, min(abs(point - x1), abs(point - x3)))
        sides['below' if w < 0.5 else 'above'].add(branch)
    consistent = len(sides['below']) <= 1 and len(sides['above']) <= 1 and sides['below'] != sides['above']
    return Claim("branch_formulas", consistent and worst <= 1e-6,
                 f"max deviation {worst:.3g}; w<1/2 -> {sorted(sides['below'])}, w>1/2 -> {sorted(sides['above'])}")
