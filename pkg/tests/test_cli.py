#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行端到端测试：每个子命令的输出与退出码
"""

import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from unittest.mock import patch

import numpy as np
import pandas as pd

import main
from src.config import save_problem_config, set_settings
from src.discontinuity_example import envelope_g_closed, example_problem_config

SMALL_GRID = "-1:3:401"


def run_cli(*argv):
    """运行 main() 并返回 (退出码, stdout, stderr)"""
    stdout, stderr = io.StringIO(), io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = main.main(list(argv))
    return code, stdout.getvalue(), stderr.getvalue()


class CliTestCase(unittest.TestCase):

    def setUp(self):
        """设置测试环境"""
        self.temp_dir = tempfile.mkdtemp()
        self.problem_file = self.path("example.json")
        save_problem_config(example_problem_config(), self.problem_file)

    def tearDown(self):
        """清理测试环境"""
        set_settings(None)
        shutil.rmtree(self.temp_dir)

    def path(self, name):
        return os.path.join(self.temp_dir, name)

    def write_problem(self, name, config):
        target = self.path(name)
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(config, f)
        return target


class TestUsage(CliTestCase):
    """测试用法错误"""

    def test_missing_required_flag(self):
        code, _, _ = run_cli('pa')
        self.assertEqual(code, 2)

    def test_unknown_command(self):
        code, _, _ = run_cli('plot')
        self.assertEqual(code, 2)

    def test_help(self):
        code, out, _ = run_cli('--help')
        self.assertEqual(code, 0)
        self.assertIn('argmin-path', out)

    def test_missing_problem_file(self):
        code, _, err = run_cli('verify', '--problem', self.path("absent.json"))
        self.assertEqual(code, 2)
        self.assertIn("absent.json", err)

    def test_negative_grid_bound(self):
        """负下界的网格覆盖：空格分隔与等号两种写法相同"""
        spaced = main.parse_arguments(['pa', '--problem', 'p.json', '--grid', '-1:3:401', '--grid', '-2:-1:5'])
        joined = main.parse_arguments(['pa', '--problem', 'p.json', '--grid=-1:3:401', '--grid=-2:-1:5'])
        self.assertEqual(spaced.grid, ['-1:3:401', '-2:-1:5'])
        self.assertEqual(joined.grid, spaced.grid)
        self.assertEqual(main.parse_arguments(['example', '--eps', '-0.5']).eps, -0.5)

    def test_grid_override_runs(self):
        """--grid -1:3:81 覆盖问题文件中的网格"""
        code, out, _ = run_cli('envelope', '--problem', self.problem_file, '--grid', '-1:3:81', '--quiet')
        self.assertEqual(code, 0)
        frame = pd.read_csv(io.StringIO(out))
        self.assertEqual(len(frame), 81)
        self.assertAlmostEqual(frame['x'].iloc[0], -1.0)

    def test_unexpected_numerical_exception(self):
        """子命令中未预期的 ValueError 映射为退出码 1，而不是抛出到调用方"""
        def broken(args):
            raise ValueError("array must not contain infs or NaNs")

        with patch.dict(main.COMMANDS, {'verify': broken}):
            code, _, err = run_cli('verify', '--problem', self.problem_file)
        self.assertEqual(code, 1)
        self.assertIn("NUMERICAL_ERROR", err)

    def test_invalid_settings_file(self):
        settings = self.path("settings.yaml")
        with open(settings, 'w', encoding='utf-8') as f:
            f.write("oracle:\n  max_basins: 0\n")
        code, _, _ = run_cli('envelope', '--problem', self.problem_file, '--grid', SMALL_GRID,
                             '--settings', settings)
        self.assertEqual(code, 2)


class TestEnvelopeCommand(CliTestCase):
    """测试 envelope 子命令"""

    def test_matches_closed_form(self):
        code, out, _ = run_cli('envelope', '--problem', self.problem_file, '--function', '1', '--r', '2',
                               '--grid', SMALL_GRID, '--out', '-', '--quiet')
        self.assertEqual(code, 0)
        frame = pd.read_csv(io.StringIO(out))
        self.assertEqual(list(frame.columns), ['x', 'value', 'grad'])
        self.assertEqual(len(frame), 401)
        np.testing.assert_allclose(frame['value'], envelope_g_closed(0, 2.0, frame['x'].to_numpy()), atol=1e-10)

    def test_function_index_out_of_range(self):
        code, _, _ = run_cli('envelope', '--problem', self.problem_file, '--function', '3', '--grid', SMALL_GRID)
        self.assertEqual(code, 2)

    def test_below_threshold(self):
        concave = {'dimension': 1, 'r': 4.0,
                   'functions': [{'pieces': [{'alpha': -3.0, 'beta': [0.0], 'gamma': 0.0}]}]}
        problem = self.write_problem("concave.json", concave)
        code, _, err = run_cli('envelope', '--problem', problem, '--r', '0.5', '--grid', SMALL_GRID)
        self.assertEqual(code, 1)
        self.assertIn("prox-parameter below threshold", err)

    def test_log_dir_records_command_timing(self):
        """--log-dir 时命令耗时写入 performance.log"""
        log_dir = self.path("logs")
        code, _, _ = run_cli('envelope', '--problem', self.problem_file, '--grid', '-1:3:81',
                             '--log-dir', log_dir, '--out', self.path("e.csv"))
        self.assertEqual(code, 0)
        with open(os.path.join(log_dir, "performance.log"), encoding='utf-8') as f:
            entries = [json.loads(line) for line in f if line.strip()]
        commands = [entry for entry in entries if entry.get('operation') == 'envelope']
        self.assertEqual(len(commands), 1)
        self.assertTrue(commands[0]['success'])

    def test_output_file_and_rerun(self):
        first, second = self.path("a.csv"), self.path("b.csv")
        for out in (first, second):
            code, stdout, _ = run_cli('envelope', '--problem', self.problem_file, '--grid', SMALL_GRID,
                                      '--out', out)
            self.assertEqual(code, 0)
            self.assertEqual(stdout, "")
        with open(first, 'rb') as a, open(second, 'rb') as b:
            self.assertEqual(a.read(), b.read())


class TestPaCommand(CliTestCase):
    """测试 pa 子命令"""

    def test_edge_sweep(self):
        code, out, err = run_cli('pa', '--problem', self.problem_file, '--edge', '1', '2', '--steps', '5',
                                 '--grid', SMALL_GRID, '--quiet')
        self.assertEqual(code, 0)
        self.assertNotIn("[INFO]", err)
        frame = pd.read_csv(io.StringIO(out))
        self.assertEqual(list(frame.columns), ['lambda_1', 'lambda_2', 'x', 'value'])
        self.assertEqual(len(frame), 5 * 401)
        middle = frame[np.isclose(frame['lambda_1'], 0.5)]
        self.assertEqual(len(middle), 401)
        left = middle[middle['x'] < 1.0]['value'].min()
        right = middle[middle['x'] > 1.0]['value'].min()
        self.assertAlmostEqual(left, right, delta=1e-8)

    def test_byte_identical_reruns(self):
        argv = ('pa', '--problem', self.problem_file, '--lambda', '0.3,0.7', '--grid', '-1:3:81', '--quiet')
        first, second = run_cli(*argv), run_cli(*argv)
        self.assertEqual(first[0], 0)
        self.assertEqual(first[1], second[1])

    def test_empty_lambda_list(self):
        code, _, err = run_cli('pa', '--problem', self.problem_file, '--grid', SMALL_GRID)
        self.assertEqual(code, 2)
        self.assertIn("λ", err)

    def test_conflicting_weight_flags(self):
        code, _, _ = run_cli('pa', '--problem', self.problem_file, '--lambda', '0.5,0.5', '--edge', '1', '2',
                             '--grid', SMALL_GRID)
        self.assertEqual(code, 2)

    def test_wrong_weight_length(self):
        code, _, _ = run_cli('pa', '--problem', self.problem_file, '--lambda', '0.2,0.3,0.5', '--grid', SMALL_GRID)
        self.assertEqual(code, 2)

    def test_off_simplex_weights(self):
        code, _, _ = run_cli('pa', '--problem', self.problem_file, '--lambda', '0.7,0.7', '--grid', SMALL_GRID)
        self.assertEqual(code, 2)


class TestArgminPathCommand(CliTestCase):
    """测试 argmin-path 子命令"""

    def test_jump_report(self):
        out = self.path("path.csv")
        code, _, _ = run_cli('argmin-path', '--problem', self.problem_file, '--edge', '1', '2', '--steps', '21',
                             '--grid', SMALL_GRID, '--out', out, '--quiet')
        self.assertEqual(code, 0)
        with open(out, encoding='utf-8') as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[0].startswith("t,lambda_1,lambda_2,argmin_count"))
        self.assertEqual(len([line for line in lines if line.startswith("#jump")]), 1)
        with open(self.path("path.jumps.json"), encoding='utf-8') as f:
            report = json.load(f)
        self.assertEqual(len(report['jumps']), 1)
        self.assertAlmostEqual(report['jumps'][0]['t_star'], 0.5)
        self.assertEqual(report['cross_check_failures'], [])

    def test_stdout_without_jumps(self):
        code, out, _ = run_cli('argmin-path', '--problem', self.problem_file, '--lambda', '1,0', '--lambda', '0.9,0.1',
                               '--grid', SMALL_GRID, '--out', '-')
        self.assertEqual(code, 0)
        self.assertNotIn("#jump", out)
        self.assertEqual(len(pd.read_csv(io.StringIO(out))), 2)


class TestVerifyCommand(CliTestCase):
    """测试 verify 子命令"""

    def test_example_passes(self):
        code, out, _ = run_cli('verify', '--problem', self.problem_file, '--grid', SMALL_GRID, '--out', '-',
                               '--quiet')
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertTrue(report['passed'])
        self.assertEqual(report['seed'], 0)
        self.assertEqual(len(report['checks']), 9)

    def test_r_below_threshold(self):
        """r 低于 prox 阈值：只报告阈值检查，退出码 1"""
        concave = {'dimension': 1, 'r': 4.0,
                   'functions': [{'pieces': [{'alpha': -3.0, 'beta': [0.0], 'gamma': 0.0}]}]}
        problem = self.write_problem("concave.json", concave)
        code, out, err = run_cli('verify', '--problem', problem, '--r', '0.5', '--grid', SMALL_GRID)
        self.assertEqual(code, 1)
        self.assertIn("CHECK_FAILED", err)
        report = json.loads(out)
        self.assertFalse(report['passed'])
        self.assertEqual([c['name'] for c in report['checks']], ['prox_threshold'])
        self.assertIn('prox_threshold', [c['name'] for c in report['checks'] if not c['passed']])


class TestExampleCommand(CliTestCase):
    """测试 example 子命令"""

    def test_stdout_report(self):
        code, out, _ = run_cli('example', '--steps', '21', '--grid', SMALL_GRID, '--out', '-', '--quiet')
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertTrue(report['passed'])
        self.assertEqual(report['steps'], 21)

    def test_output_directory(self):
        target = self.path("demo")
        code, _, _ = run_cli('example', '--steps', '21', '--grid', SMALL_GRID, '--out', target, '--quiet')
        self.assertEqual(code, 0)
        for name in ('figure_functions.csv', 'figure_weighted_envelopes.csv', 'argmin_path.csv',
                     'demo_report.json', 'example_problem.json'):
            self.assertTrue(os.path.exists(os.path.join(target, name)), name)
        envelopes = pd.read_csv(os.path.join(target, 'figure_weighted_envelopes.csv'))
        self.assertEqual(list(envelopes.columns), ['x', 'w=0', 'w=0.25', 'w=0.5', 'w=0.75', 'w=1'])
        with open(os.path.join(target, 'example_problem.json'), encoding='utf-8') as f:
            self.assertEqual(json.load(f)['grid']['points'], [401])

    def test_invalid_eps(self):
        code, _, _ = run_cli('example', '--eps', '1.5', '--steps', '5', '--grid', SMALL_GRID)
        self.assertEqual(code, 2)


if __name__ == '__main__':
    unittest.main()
