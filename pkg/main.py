#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
NC近端平均工具包 命令行入口

子命令：
    envelope     单个函数的 Moreau 包络曲线 (x,value,grad)
    pa           PA(x, λ) 曲面，λ 来自 --lambda 或 --edge/--steps
    argmin-path  沿 λ 路径跟踪极小点并报告跳变
    verify       对问题文件运行全部正则性检查
    example      不连续性演示及图表数据

退出码：0 成功，1 数值错误或检查失败，2 配置/用法错误
"""

import os
import sys
import argparse
from typing import List, Optional

# 确保可以从任意工作目录导入 src 包
if getattr(sys, 'frozen', False):
    application_path = os.path.dirname(sys.executable)
else:
    application_path = os.path.dirname(os.path.abspath(__file__))

if application_path not in sys.path:
    sys.path.insert(0, application_path)

from src.config import (get_settings, load_problem, load_settings, parse_grid_override,
                        parse_lambda, set_settings)
from src.data_export import (argmin_path_frame, curves_frame, envelope_frame, jump_comments,
                             surface_frame, write_frame, write_json)
from src.discontinuity_example import (example_problem_config, figure_data,
                                       run_discontinuity_demo)
from src.exceptions import (CheckFailedError, ConfigurationError, ProxAverageError, handle_exception,
                            log_and_raise)
from src.funcspace import GridSpec, SimplexWeight, simplex_path
from src.logging_system import get_structlog_logger, setup_logging
from src.minpath import track_argmin
from src.moreau import envelope_curve
from src.performance import get_default_cache_manager, parallel_map
from src.proxavg import pa_values
from src.regularity import run_verification_suite

logger = get_structlog_logger("main")


# ---------------------------------------------------------------------------
# 参数解析
# ---------------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    """所有子命令共享的选项"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', default='-',
                        help="输出路径，'-' 表示标准输出（example 子命令可给目录）")
    common.add_argument('--grid', action='append', default=None, metavar='LO:HI:N',
                        help='每个维度一个网格覆盖，可重复')
    common.add_argument('--seed', type=int, default=0, help='随机种子，默认 0')
    common.add_argument('--quiet', action='store_true', help='只输出警告及以上级别的日志')
    common.add_argument('--settings', default=None, help='YAML 数值设置文件')
    common.add_argument('--log-dir', default=None, help='写入 JSON 日志文件的目录')
    return common


def _problem_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument('--problem', required=True, help='问题定义文件 (JSON)')
    options.add_argument('--r', type=float, default=None, help='覆盖文件中的 r')
    return options


def _weight_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument('--lambda', dest='lambdas', action='append', default=None, metavar='W1,W2,...',
                         help='权重向量，可重复')
    options.add_argument('--edge', nargs=2, type=int, default=None, metavar=('I', 'J'),
                         help='沿顶点 e_I 到 e_J 的边（从 1 开始）')
    options.add_argument('--steps', type=int, default=None, help='边上的点数')
    options.add_argument('--tie-tol', type=float, default=None, help='并列极小的判定容差')
    return options


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(description='NC近端平均工具包 - Moreau 包络、近端平均与极小点路径')
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True
    common, problem, weights = _common_options(), _problem_options(), _weight_options()

    envelope = subparsers.add_parser('envelope', parents=[common, problem],
                                     help='单个函数的 Moreau 包络曲线')
    envelope.add_argument('--function', type=int, default=1, help='函数编号（从 1 开始）')

    subparsers.add_parser('pa', parents=[common, problem, weights], help='近端平均曲面')

    path = subparsers.add_parser('argmin-path', parents=[common, problem, weights],
                                 help='沿 λ 路径跟踪极小点')
    path.add_argument('--jump-threshold', type=float, default=None, help='跳变判定阈值')
    path.add_argument('--report', default=None, help='跳变报告 JSON 路径')

    subparsers.add_parser('verify', parents=[common, problem], help='运行正则性检查')

    example = subparsers.add_parser('example', parents=[common], help='不连续性演示')
    example.add_argument('--eps', type=float, default=0.5, help='示例参数 ε，取值 (0, 1]')
    example.add_argument('--r', type=float, default=2.0, help='内层参数 r（须大于 1）')
    example.add_argument('--steps', type=int, default=101, help='边上的点数')
    return parser


# 取值可能以 "-" 开头的选项（负的网格下界、负参数）
VALUE_OPTIONS = ('--grid', '--r', '--eps')


def _join_option_values(argv: List[str]) -> List[str]:
    """`--grid -1:3:401` 改写为 `--grid=-1:3:401`"""
    joined: List[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in VALUE_OPTIONS and i + 1 < len(argv):
            joined.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        joined.append(token)
        i += 1
    return joined


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """解析命令行参数"""
    argv = sys.argv[1:] if argv is None else list(argv)
    return build_parser().parse_args(_join_option_values(argv))


# ---------------------------------------------------------------------------
# 参数辅助
# ---------------------------------------------------------------------------

def _grid_override(args) -> Optional[list]:
    if not args.grid:
        return None
    return [parse_grid_override(text) for text in args.grid]


def _load(args, check_thresholds: bool = True):
    return load_problem(args.problem, r=args.r, grid=_grid_override(args), check_thresholds=check_thresholds)


def _weight_list(args, m: int) -> List[SimplexWeight]:
    """--lambda 列表或 --edge/--steps 路径；两者都没有时报配置错误"""
    if args.lambdas and args.edge:
        raise ConfigurationError("--lambda 与 --edge 不能同时使用")
    if args.lambdas:
        return [SimplexWeight(tuple(parse_lambda(text))) for text in args.lambdas]
    if args.edge:
        i, j = args.edge
        if not (1 <= i <= m and 1 <= j <= m) or i == j:
            raise ConfigurationError(f"--edge 需要 1..{m} 中两个不同的顶点，实际为 {i} {j}")
        steps = args.steps if args.steps is not None else 11
        if steps < 2:
            raise ConfigurationError("--steps 至少为 2")
        return simplex_path(SimplexWeight.vertex(m, i - 1), SimplexWeight.vertex(m, j - 1), steps)
    raise ConfigurationError("λ 列表为空：请给出 --lambda 或 --edge")


def _check_weights(weights: List[SimplexWeight], m: int) -> None:
    for lam in weights:
        if lam.m != m:
            raise ConfigurationError(f"权重维度应为 {m}，实际为 {lam.m}: {list(lam.weights)}")


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def cmd_envelope(args) -> int:
    problem = _load(args, check_thresholds=False)
    if not 1 <= args.function <= problem.m:
        raise ConfigurationError(f"--function 应在 1..{problem.m} 之间，实际为 {args.function}")
    f = problem.functions[args.function - 1]
    values, gradients = envelope_curve(f, problem.r, problem.inner_grid)
    write_frame(envelope_frame(problem.inner_grid.points(), values, gradients), args.out)
    logger.info("envelope_written", function=args.function, r=problem.r, points=len(values))
    return 0


def cmd_pa(args) -> int:
    problem = _load(args)
    weights = _weight_list(args, problem.m)
    _check_weights(weights, problem.m)
    points = problem.inner_grid.points()
    curves = parallel_map(lambda lam: pa_values(problem, points, lam, tie_tol=args.tie_tol), weights)
    write_frame(surface_frame(points, [(lam.weights, values) for lam, values in zip(weights, curves)]), args.out)
    logger.info("pa_written", curves=len(weights), points=len(points))
    return 0


def cmd_argmin_path(args) -> int:
    problem = _load(args)
    weights = _weight_list(args, problem.m)
    _check_weights(weights, problem.m)
    path = track_argmin(problem, weights, tie_tol=args.tie_tol, jump_threshold=args.jump_threshold,
                        seed=args.seed)
    write_frame(argmin_path_frame(path), args.out, comments=jump_comments(path))

    report = args.report
    if report is None and args.out != '-':
        report = os.path.splitext(args.out)[0] + '.jumps.json'
    if report is not None:
        write_json(path.to_dict(), report)

    if path.cross_check_failures:
        log_and_raise(logger, CheckFailedError(
            f"{len(path.cross_check_failures)} 个记录的极小点与直接最小化 PA 不一致",
            check_name="argmin_equivalence"), level="warning")
    return 0


def cmd_verify(args) -> int:
    problem = _load(args, check_thresholds=False)
    suite = run_verification_suite(problem, seed=args.seed)
    write_json(suite.to_dict(), args.out)
    if not suite.passed:
        log_and_raise(logger, CheckFailedError(
            f"未通过的检查: {', '.join(suite.failed_checks)}", check_name=suite.failed_checks[0]),
            level="warning")
    return 0


def cmd_example(args) -> int:
    grid = GridSpec.from_axes(_grid_override(args)) if args.grid else None
    report = run_discontinuity_demo(steps=args.steps, eps=args.eps, r=args.r, grid=grid)

    if args.out == '-':
        write_json(report.to_dict(), '-')
    else:
        try:
            os.makedirs(args.out, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f"无法创建输出目录: {e}", config_path=args.out)
        functions, envelopes = figure_data(grid, eps=args.eps, r=args.r)
        write_frame(curves_frame(functions), os.path.join(args.out, 'figure_functions.csv'))
        write_frame(curves_frame(envelopes), os.path.join(args.out, 'figure_weighted_envelopes.csv'))
        write_frame(argmin_path_frame(report.path), os.path.join(args.out, 'argmin_path.csv'),
                    comments=jump_comments(report.path))
        write_json(report.to_dict(), os.path.join(args.out, 'demo_report.json'))
        write_json(example_problem_config(args.eps, args.r, grid), os.path.join(args.out, 'example_problem.json'))

    if not report.passed:
        log_and_raise(logger, CheckFailedError(
            f"未成立的结论: {', '.join(report.failed_claims)}", check_name=report.failed_claims[0]),
            level="warning")
    return 0


COMMANDS = {
    'envelope': cmd_envelope,
    'pa': cmd_pa,
    'argmin-path': cmd_argmin_path,
    'verify': cmd_verify,
    'example': cmd_example,
}


def main(argv: Optional[List[str]] = None) -> int:
    """运行一个子命令并返回退出码"""
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        # argparse 的用法错误退出码为 2，--help 为 0
        return int(e.code or 0)

    try:
        if args.settings:
            set_settings(load_settings(args.settings))
        settings = get_settings()
        level = 'WARNING' if args.quiet else settings.logging.level
        log_manager = setup_logging(level, args.log_dir or settings.logging.log_dir)
        with log_manager.log_operation(args.command, 'main'):
            code = handle_exception(COMMANDS[args.command])(args)
        logger.debug("cache_stats", **get_default_cache_manager().get_stats())
        return code
    except ProxAverageError as e:
        logger.error("command_failed", command=args.command, error_code=e.error_code, message=e.message)
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
