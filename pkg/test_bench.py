"""
Tests for the clutter sweep, trial records, result tables and plan replay.
"""
import json
import math
import os
import shutil
import tempfile
import unittest

import pandas as pd

from bench import TrialRecord, replay, run_sweep, run_trial, shared_endpoints, trial_seed
from config import Settings
from errors import ReplayMismatch
from geometry import ConvexPolygon, Pose2, contains_in_room, transform
from path_planners import FootprintKind, PathFootprint, straight_footprint_polygon
from push_planner import PlannerConfig, PlannerKind, plan_clear_path
from scenario_io import save_plan, save_scenario
from sweep_report import CSV_COLUMNS, read_results, render_table, success_table
from world import MovableObject, Room, Scenario, WorldState, default_agent_shape, default_path_shape, \
    generate_scenario, square_side_for_clutter


def record(level, seed, planner, success, pushes=0):
    return TrialRecord(level, float(level), seed, planner, success, pushes, 1 if pushes else 0, 0, 0.5)


class BenchTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp(prefix='namo_bench_')
        self.settings = Settings(rrt_max_nodes=3000, trial_time_budget=60.0, candidates_per_level=5)

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


class TestTrialRecords(unittest.TestCase):
    """Test cases for trial seeds, records and success tables."""

    def test_trial_seed(self):
        self.assertEqual(trial_seed(18, 3), 1800003)
        self.assertEqual(trial_seed(43, 0), 4300000)
        self.assertNotEqual(trial_seed(18, 1), trial_seed(37, 1))

    def test_row_matches_columns(self):
        row = record(18, 1, 'RRT_CONNECT', True).as_row()
        self.assertEqual(len(row), len(CSV_COLUMNS))
        self.assertEqual(row[3], 'RRT_CONNECT')

    def test_success_table(self):
        records = [
            record(37, 2, 'MIN_COLLISION', True, 3),
            record(18, 1, 'STRAIGHT_LINE', False),
            record(18, 1, 'RRT_CONNECT', True),
            record(18, 2, 'RRT_CONNECT', True),
            record(37, 2, 'RRT_CONNECT', False),
        ]
        table = success_table(records)
        self.assertEqual(list(table.columns), ['RRT_CONNECT', 'STRAIGHT_LINE', 'MIN_COLLISION'])
        self.assertEqual(table.loc[18, 'RRT_CONNECT'], 2)
        self.assertEqual(table.loc[37, 'MIN_COLLISION'], 1)
        self.assertEqual(table.loc[18, 'MIN_COLLISION'], 0)
        text = render_table(records, trials_per_level=2)
        self.assertIn('2/2', text)
        self.assertEqual(len(text.strip().splitlines()), 4)

    def test_empty_table(self):
        text = render_table([])
        self.assertEqual(len(text.strip().splitlines()), 2)
        self.assertIn('MIN_COLLISION', text)


class TestSweep(BenchTestCase):
    """Test cases for run_sweep and run_trial."""

    def test_zero_trials(self):
        records = run_sweep((18,), 0, out_dir=self.tmp, settings=self.settings)
        self.assertEqual(records, [])
        frame = read_results(os.path.join(self.tmp, 'results.csv'))
        self.assertEqual(list(frame.columns), CSV_COLUMNS)
        self.assertEqual(len(frame), 0)
        self.assertTrue(os.path.exists(os.path.join(self.tmp, 'table.txt')))

    def test_shared_endpoints_are_seeded(self):
        scenario = generate_scenario(trial_seed(18, 0), 2.55)
        self.assertEqual(shared_endpoints(scenario, 11), shared_endpoints(scenario, 11))
        start, goal = shared_endpoints(scenario, 11)
        self.assertLess(start.x, goal.x)

    def test_rrt_trial_at_low_clutter(self):
        result = run_trial(18, 0, [PlannerKind.RRT_CONNECT], self.settings, out_dir=self.tmp)
        self.assertEqual(len(result.records), 1)
        trial = result.records[0]
        self.assertEqual((trial.planner, trial.seed, trial.pushes), ('RRT_CONNECT', 1800000, 0))
        self.assertAlmostEqual(trial.clutter_actual, 18.0, places=6)
        self.assertLessEqual(trial.wall_time, 60.0 + 5.0)
        self.assertIn('RRT_CONNECT', result.monitors)
        self.assertTrue(os.path.exists(os.path.join(self.tmp, 'scenarios', 'clutter18_seed1800000.json')))
        plan_path = os.path.join(self.tmp, 'plans', 'clutter18_seed1800000_rrt_connect.json')
        self.assertEqual(os.path.exists(plan_path), trial.success)
        self.assertEqual(trial.levels_used, 0)

    def test_rrt_trial_in_sparse_room(self):
        settings = Settings(rrt_max_nodes=20000, trial_time_budget=600.0)
        result = run_trial(2, 0, [PlannerKind.RRT_CONNECT], settings, out_dir=self.tmp)
        trial = result.records[0]
        self.assertTrue(trial.success)
        self.assertEqual((trial.seed, trial.pushes), (200000, 0))
        plan_path = os.path.join(self.tmp, 'plans', 'clutter2_seed200000_rrt_connect.json')
        scenario_path = os.path.join(self.tmp, 'scenarios', 'clutter2_seed200000.json')
        self.assertTrue(os.path.exists(os.path.join(self.tmp, 'svg', 'clutter2_seed200000_rrt_connect.svg')))
        self.assertTrue(replay(plan_path, scenario_path).is_valid)

    def test_sweep_records_sorted(self):
        records = run_sweep((18,), 1, planners=('RRT_CONNECT',), out_dir=self.tmp, settings=self.settings)
        self.assertEqual(len(records), 1)
        frame = pd.read_csv(os.path.join(self.tmp, 'results.csv'))
        self.assertEqual(frame['planner'].tolist(), ['RRT_CONNECT'])
        self.assertEqual(frame['seed'].tolist(), [trial_seed(18, 0)])


class TestClutterTrend(BenchTestCase):
    """Test cases for planner success across clutter levels."""

    def test_endpoints_fall_back_when_objects_fill_the_bands(self):
        scenario = generate_scenario(trial_seed(18, 6), square_side_for_clutter(18))
        with self.assertLogs(level='WARNING') as logs:
            start, goal = shared_endpoints(scenario, trial_seed(18, 6))
        self.assertIn('allowing endpoints on objects', logs.output[0])
        for pose in (start, goal):
            self.assertTrue(contains_in_room(transform(scenario.agent_shape, pose), scenario.room))
        self.assertLess(start.x, goal.x)

    def test_push_planners_dominate_at_low_clutter(self):
        settings = Settings(rrt_max_nodes=3000, trial_time_budget=600.0, candidates_per_level=5)
        min_successes = 0
        for trial in range(2):
            result = run_trial(18, trial, list(PlannerKind), settings, out_dir=self.tmp)
            by_planner = {r.planner: r for r in result.records}
            with self.subTest(trial=trial):
                rrt, straight, mincol = (by_planner[k.value] for k in PlannerKind)
                self.assertGreaterEqual(mincol.success, straight.success)
                self.assertGreaterEqual(mincol.success, rrt.success)
                self.assertEqual(rrt.pushes, 0)
                for trial_record in result.records:
                    if not trial_record.success:
                        continue
                    stem = f"clutter18_seed{trial_record.seed}"
                    plan_path = os.path.join(self.tmp, 'plans', f"{stem}_{trial_record.planner.lower()}.json")
                    scenario_path = os.path.join(self.tmp, 'scenarios', stem + '.json')
                    self.assertTrue(replay(plan_path, scenario_path).is_valid)
                min_successes += mincol.success
        self.assertGreaterEqual(min_successes, 1)

    def test_dense_lattice_has_no_collision_free_path(self):
        settings = Settings(rrt_max_nodes=2000, trial_time_budget=600.0)
        result = run_trial(37, 0, [PlannerKind.RRT_CONNECT], settings)
        self.assertFalse(result.records[0].success)


class TestReplay(BenchTestCase):
    """Test cases for replaying stored plans."""

    def setUp(self):
        super().setUp()
        square = ConvexPolygon.square(2.0)
        state = WorldState(Room(), (MovableObject(0, square, Pose2(10, 10, 0)),
                                    MovableObject(1, square, Pose2(25, 10, 0))))
        self.scenario = Scenario(0, state, default_agent_shape(), default_path_shape())
        start, goal = Pose2(1.5, 10, 0), Pose2(36.5, 10, 0)
        footprint = PathFootprint(FootprintKind.STRAIGHT_LINE, (straight_footprint_polygon(start, goal, 1.5),),
                                  start, goal)
        self.plan = plan_clear_path(self.scenario, [footprint], PlannerConfig(g=4, L_max=2, candidates_per_level=1))
        self.scenario_path = os.path.join(self.tmp, 'scenario.json')
        self.plan_path = os.path.join(self.tmp, 'plan.json')
        save_scenario(self.scenario_path, self.scenario)
        save_plan(self.plan_path, self.plan)

    def test_stored_plan_replays(self):
        result = replay(self.plan_path, self.scenario_path)
        self.assertTrue(result.exact_match)
        self.assertTrue(result.is_valid)
        self.assertEqual(result.report.describe(), 'valid')

    def test_perturbed_distance_is_detected(self):
        with open(self.plan_path, encoding='utf-8') as f:
            document = json.load(f)
        document['pushes'][0]['distance'] += 1.0
        with open(self.plan_path, 'w', encoding='utf-8') as f:
            json.dump(document, f)
        with self.assertRaises(ReplayMismatch):
            replay(self.plan_path, self.scenario_path)

    def test_perturbed_direction_is_detected(self):
        with open(self.plan_path, encoding='utf-8') as f:
            document = json.load(f)
        self.assertGreater(len(document['pushes']), 0)
        document['pushes'][0]['phi'] += math.pi / 12
        with open(self.plan_path, 'w', encoding='utf-8') as f:
            json.dump(document, f)
        with self.assertRaises(ReplayMismatch):
            replay(self.plan_path, self.scenario_path)

    def test_wrong_scenario_is_detected(self):
        other = generate_scenario(3, 2.55)
        save_scenario(self.scenario_path, other)
        with self.assertRaises(ReplayMismatch):
            replay(self.plan_path, self.scenario_path)

    def test_failed_trial_setup_records_nan(self):
        # squares wider than a lattice cell cannot be placed
        result = run_trial(95, 0, [PlannerKind.STRAIGHT_LINE], self.settings)
        self.assertFalse(result.records[0].success)
        self.assertTrue(math.isnan(result.records[0].clutter_actual))


if __name__ == '__main__':
    unittest.main()
