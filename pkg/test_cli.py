"""
Tests for the command line interface.
"""
import json
import os
import shutil
import tempfile
import unittest

from click.testing import CliRunner

from cli import cli


class TestCli(unittest.TestCase):
    """Test cases for the namo CLI commands."""

    def setUp(self):
        self.runner = CliRunner()
        self.tmp = tempfile.mkdtemp(prefix='namo_cli_')
        self.scenario_path = os.path.join(self.tmp, 'scenario.json')
        self.config_path = os.path.join(self.tmp, 'config.json')
        with open(self.config_path, 'w', encoding='utf-8') as f:
            json.dump({'version': 1, 'rrt': {'max_nodes': 2000}, 'sweep': {'time_budget': 60}}, f)

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def generate(self, seed=3, clutter=18):
        return self.runner.invoke(cli, ['generate', '--seed', str(seed), '--clutter', str(clutter),
                                        '--out', self.scenario_path])

    def test_generate(self):
        result = self.generate()
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('Scenario seed=3: 20 squares, clutter 18.00%', result.output)
        with open(self.scenario_path, encoding='utf-8') as f:
            self.assertEqual(json.load(f)['version'], 1)

    def test_generate_impossible_clutter(self):
        result = self.generate(clutter=95)
        self.assertEqual(result.exit_code, 1)
        self.assertIn('PLACEMENT_FAILED', result.output)

    def test_plan_and_replay(self):
        self.generate()
        out_dir = os.path.join(self.tmp, 'out')
        result = self.runner.invoke(cli, ['plan', '--scenario', self.scenario_path, '--planner', 'rrt',
                                          '--out', out_dir, '--svg', '--config', self.config_path])
        self.assertIn(result.exit_code, (0, 2), result.output)
        if result.exit_code == 2:
            self.assertIn('No plan', result.output)
            return
        self.assertIn('Plan found by RRT_CONNECT', result.output)
        self.assertTrue(os.path.exists(os.path.join(out_dir, 'plan.svg')))
        replayed = self.runner.invoke(cli, ['replay', '--plan', os.path.join(out_dir, 'plan.json'),
                                            '--scenario', self.scenario_path])
        self.assertEqual(replayed.exit_code, 0, replayed.output)
        self.assertIn('Replay matches the stored final state', replayed.output)

    def test_plan_rejects_malformed_scenario(self):
        with open(self.scenario_path, 'w', encoding='utf-8') as f:
            f.write('{"version": 1, "seed": ')
        result = self.runner.invoke(cli, ['plan', '--scenario', self.scenario_path, '--out', self.tmp])
        self.assertEqual(result.exit_code, 1)
        self.assertIn('PARSE_ERROR', result.output)

    def test_plan_rejects_unknown_planner(self):
        self.generate()
        result = self.runner.invoke(cli, ['plan', '--scenario', self.scenario_path, '--planner', 'astar',
                                          '--out', self.tmp])
        self.assertNotEqual(result.exit_code, 0)

    def test_heatmap(self):
        self.generate()
        png = os.path.join(self.tmp, 'heat.png')
        result = self.runner.invoke(cli, ['heatmap', '--scenario', self.scenario_path, '--out', png])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('Heat map', result.output)
        self.assertTrue(os.path.getsize(png) > 0)

    def test_sweep_without_trials(self):
        out_dir = os.path.join(self.tmp, 'sweep')
        result = self.runner.invoke(cli, ['sweep', '--levels', '18,37', '--trials', '0', '--out', out_dir])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('Sweep completed: 0 trial records', result.output)
        self.assertTrue(os.path.exists(os.path.join(out_dir, 'results.csv')))

    def write_results_csv(self):
        csv_path = os.path.join(self.tmp, 'results.csv')
        rows = ['clutter_target,clutter_actual,seed,planner,success,pushes,levels_used,shrink_iterations,wall_time',
                '18,0.18,1800000,RRT_CONNECT,True,0,0,0,1.5',
                '18,0.18,1800000,STRAIGHT_LINE,True,2,1,0,2.0',
                '18,0.18,1800000,MIN_COLLISION,True,1,1,0,3.0',
                '37,0.37,3700000,RRT_CONNECT,False,0,0,0,9.0',
                '37,0.37,3700000,STRAIGHT_LINE,False,0,0,0,9.0',
                '37,0.37,3700000,MIN_COLLISION,True,4,2,3,12.0']
        with open(csv_path, 'w', encoding='utf-8') as f:
            f.write('\n'.join(rows) + '\n')
        return csv_path

    def test_report(self):
        png = os.path.join(self.tmp, 'success.png')
        result = self.runner.invoke(cli, ['report', '--results', self.write_results_csv(), '--trials', '1',
                                          '--plot', png])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('6 trial records', result.output)
        self.assertIn('1/1', result.output)
        self.assertIn('0/1', result.output)
        self.assertTrue(os.path.getsize(png) > 0)

    def test_report_rejects_missing_columns(self):
        csv_path = os.path.join(self.tmp, 'partial.csv')
        with open(csv_path, 'w', encoding='utf-8') as f:
            f.write('clutter_target,planner\n18,RRT_CONNECT\n')
        result = self.runner.invoke(cli, ['report', '--results', csv_path])
        self.assertEqual(result.exit_code, 1)
        self.assertIn('lacks columns', result.output)

    def test_sweep_rejects_bad_arguments(self):
        out_dir = os.path.join(self.tmp, 'sweep')
        result = self.runner.invoke(cli, ['sweep', '--trials', '-1', '--out', out_dir])
        self.assertEqual(result.exit_code, 2)
        result = self.runner.invoke(cli, ['sweep', '--planners', 'rrt,bogus', '--out', out_dir])
        self.assertEqual(result.exit_code, 2)


if __name__ == '__main__':
    unittest.main()
