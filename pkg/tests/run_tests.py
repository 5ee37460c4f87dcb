#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试运行器
按套件运行基础设施、数值核心、性能与集成测试
"""

import sys
import argparse
import unittest
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

NUMERICAL_MODULES = [
    'tests.test_funcspace',
    'tests.test_oracle',
    'tests.test_moreau',
    'tests.test_proxavg',
    'tests.test_regularity',
    'tests.test_minpath',
    'tests.test_discontinuity_example',
    'tests.test_properties',
]


def run_basic_tests():
    """运行基础单元测试"""
    print("=" * 60)
    print("运行基础单元测试")
    print("=" * 60)

    try:
        from tests.test_basic import run_tests
        return run_tests()
    except ImportError as e:
        print(f"导入测试模块失败: {e}")
        return False


def run_numerical_tests(verbose=False):
    """运行数值核心测试"""
    print("=" * 60)
    print("运行数值核心测试")
    print("=" * 60)

    try:
        suite = unittest.TestLoader().loadTestsFromNames(NUMERICAL_MODULES)
    except ImportError as e:
        print(f"导入测试模块失败: {e}")
        return False

    result = unittest.TextTestRunner(verbosity=2 if verbose else 1).run(suite)
    return result.wasSuccessful()


def run_performance_tests():
    """运行性能测试"""
    print("=" * 60)
    print("运行性能测试")
    print("=" * 60)

    try:
        import time
        import numpy as np

        from src.discontinuity_example import example_problem, make_g
        from src.funcspace import GridSpec
        from src.moreau import envelope_exact_1d, prox_oracle_many
        from src.proxavg import pa_values

        xs = np.linspace(-1.0, 3.0, 2001)
        g0 = make_g(0)

        print("测试一维精确包络...")
        start_time = time.time()
        for _ in range(100):
            envelope_exact_1d(g0, 2.0, xs)
        exact_time = time.time() - start_time
        print(f"精确包络: {100 * len(xs) / exact_time:.0f} 点/秒")

        print("\n测试网格神谕包络...")
        grid = GridSpec((-2.0,), (4.0,), (1201,))
        start_time = time.time()
        prox_oracle_many(g0, 2.0, xs[::10], grid)
        oracle_time = time.time() - start_time
        print(f"神谕包络: {len(xs[::10]) / oracle_time:.0f} 点/秒")

        print("\n测试近端平均...")
        problem = example_problem()
        start_time = time.time()
        pa_values(problem, xs[::4], (0.5, 0.5))
        pa_time = time.time() - start_time
        print(f"PA(·, λ): {len(xs[::4]) / pa_time:.0f} 点/秒")

        print("\n✅ 性能测试完成")
        return True

    except Exception as e:
        print(f"性能测试失败: {e}")
        return False


def run_integration_tests():
    """运行集成测试"""
    print("=" * 60)
    print("运行集成测试")
    print("=" * 60)

    try:
        import tempfile
        import shutil

        temp_dir = Path(tempfile.mkdtemp())

        try:
            from src.config import load_settings, set_settings, save_problem_config, load_problem
            from src.discontinuity_example import example_problem_config, run_discontinuity_demo
            from src.minpath import track_argmin
            from src.funcspace import SimplexWeight, simplex_path
            from src.regularity import run_verification_suite

            print("测试设置文件加载...")
            settings = load_settings(str(project_root / "tests" / "test_config.yaml"))
            set_settings(settings)
            print("✅ 设置文件加载测试通过")

            print("测试问题文件保存、加载与验证...")
            problem_file = temp_dir / "example.json"
            save_problem_config(example_problem_config(), str(problem_file))
            problem = load_problem(str(problem_file), grid=[(-1.0, 3.0, 401)])
            report = run_verification_suite(problem)
            assert report.passed, report.failed_checks
            print("✅ 问题验证测试通过")

            print("测试极小点路径...")
            edge = simplex_path(SimplexWeight((1.0, 0.0)), SimplexWeight((0.0, 1.0)), 21)
            path = track_argmin(problem, edge)
            assert len(path.jumps) == 1
            assert abs(path.jumps[0].t_star - 0.5) < 1e-12
            print("✅ 极小点路径测试通过")

            print("测试不连续性演示...")
            demo = run_discontinuity_demo(steps=21, grid=problem.inner_grid)
            assert demo.passed, demo.failed_claims
            print("✅ 不连续性演示测试通过")

            print("\n🎉 所有集成测试通过!")
            return True

        finally:
            set_settings(None)
            shutil.rmtree(temp_dir)

    except Exception as e:
        print(f"集成测试失败: {e}")
        import traceback
        traceback.print_exc()
        return False


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description="NC近端平均工具包 测试运行器")
    parser.add_argument('--basic', action='store_true', help='运行基础单元测试')
    parser.add_argument('--numerical', action='store_true', help='运行数值核心测试')
    parser.add_argument('--performance', action='store_true', help='运行性能测试')
    parser.add_argument('--integration', action='store_true', help='运行集成测试')
    parser.add_argument('--all', action='store_true', help='运行所有测试')
    parser.add_argument('--verbose', '-v', action='store_true', help='详细输出')

    args = parser.parse_args()

    # 如果没有指定测试类型，运行所有测试
    if not any([args.basic, args.numerical, args.performance, args.integration, args.all]):
        args.all = True

    results = {}

    if args.basic or args.all:
        results['basic'] = run_basic_tests()
        print()

    if args.numerical or args.all:
        results['numerical'] = run_numerical_tests(args.verbose)
        print()

    if args.performance or args.all:
        results['performance'] = run_performance_tests()
        print()

    if args.integration or args.all:
        results['integration'] = run_integration_tests()
        print()

    print("=" * 60)
    print("测试结果总结")
    print("=" * 60)

    for test_type, success in results.items():
        status = "✅ 通过" if success else "❌ 失败"
        print(f"{test_type.capitalize():<12}: {status}")

    total_tests = len(results)
    passed_tests = sum(1 for success in results.values() if success)

    print(f"\n总体结果: {passed_tests}/{total_tests} 测试套件通过")

    if passed_tests == total_tests:
        print("🎉 所有测试通过!")
        return 0
    else:
        print("⚠️  部分测试失败")
        return 1


if __name__ == '__main__':
    sys.exit(main())
