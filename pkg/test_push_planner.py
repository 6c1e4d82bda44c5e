"""
Tests for the path-clearing push planner on small constructed scenes.
"""
import itertools
import math
import unittest
from collections import Counter

import numpy as np

from geometry import ConvexPolygon, Pose2, contains_in_room, intersects, transform
from monitoring import SearchMonitor
from path_planners import FootprintKind, PathFootprint, straight_footprint_polygon
from push_physics import PushAction, PushSimulator, Termination, push_corridor, push_directions
from push_planner import (PlannerConfig, PlannerKind, clear_subgoal, overlapping_objects, plan_cascade,
                          plan_clear_path, plan_with, replay_plan, subgoal_test)
from validation import validate_terminal
from world import MovableObject, Room, Scenario, WorldState, default_agent_shape, default_path_shape


def make_state(*placements):
    """placements: (x, y) or (x, y, immovable); 2 cm squares"""
    square = ConvexPolygon.square(2.0)
    objects = []
    for i, placement in enumerate(placements):
        immovable = placement[2] if len(placement) > 2 else False
        objects.append(MovableObject(i, square, Pose2(placement[0], placement[1], 0), immovable))
    return WorldState(Room(), tuple(objects))


def make_scenario(state):
    return Scenario(0, state, default_agent_shape(), default_path_shape())


def strip(y, x0=1.5, x1=36.5):
    start, goal = Pose2(x0, y, 0), Pose2(x1, y, 0)
    return PathFootprint(FootprintKind.STRAIGHT_LINE, (straight_footprint_polygon(start, goal, 1.5),),
                         start, goal)


def pusher_blocked_state():
    """Target on strip(10); a tall blocker sits where the target's pushers go, an immovable stops it below."""
    return WorldState(Room(), (
        MovableObject(0, ConvexPolygon.square(2.0), Pose2(19.0, 10.0, 0)),
        MovableObject(1, ConvexPolygon.rectangle(1.0, 4.0), Pose2(16.7, 6.5, 0)),
        MovableObject(2, ConvexPolygon.rectangle(1.0, 1.0), Pose2(19.0, 7.4, 0), True),
    ))


def second_target_first_state():
    """Two objects on strip(10); the nearer one only clears once the farther one has moved."""
    return WorldState(Room(), (
        MovableObject(0, ConvexPolygon.square(2.0), Pose2(10.0, 10.0, 0)),
        MovableObject(1, ConvexPolygon.square(2.0), Pose2(12.5, 9.0, 0)),
        MovableObject(2, ConvexPolygon.rectangle(1.0, 1.0), Pose2(10.0, 7.5, 0), True),
    ))


def random_small_state(rng, room, count=3, side=1.5):
    objects = []
    while len(objects) < count:
        pose = Pose2(rng.uniform(1.0, room.x_max - 1.0), rng.uniform(1.0, room.y_max - 1.0),
                     rng.uniform(0.0, math.pi / 2))
        candidate = MovableObject(len(objects), ConvexPolygon.square(side), pose)
        if not contains_in_room(candidate.polygon, room):
            continue
        if any(intersects(candidate.polygon, obj.polygon) for obj in objects):
            continue
        objects.append(candidate)
    return WorldState(room, tuple(objects))


def reference_subgoal(state, target_id, footprint, limit, g, committed, k):
    """
    Level-by-level enumeration of the means-end tree for one object, each
    sequence simulated from scratch. Returns (state, [(object_id, phi)]) or None.
    """
    simulator = PushSimulator()
    directions = push_directions(g)

    def within_budget(history):
        counts = Counter(committed)
        counts.update(object_id for object_id, _, _ in history)
        return all(count <= k for count in counts.values())

    def run(history):
        current, steps = state, []
        for object_id, direction, region in history:
            outcome = simulator.simulate_push(current, PushAction(object_id, directions[direction]), region)
            if outcome.termination == Termination.INFEASIBLE_PLACEMENT and not outcome.is_stalled:
                return None
            steps.append((current, outcome))
            if outcome.is_stalled:
                return current, steps, True
            current = outcome.new_state
        return current, steps, False

    def expand(history, steps):
        for index in range(len(steps) - 1, -1, -1):
            before, outcome = steps[index]
            object_id, direction, _ = history[index]
            if outcome.is_stalled:
                region = (transform(simulator.pusher_shape, outcome.pusher_pose),)
                break
            if outcome.termination == Termination.WALL_CONTACT and outcome.blocking_id != object_id:
                region = (push_corridor(before, object_id, directions[direction]),)
                break
        else:
            return []
        return [history[:index] + ((outcome.blocking_id, d, region), history[index]) + history[index + 1:]
                for d in range(g)]

    level = [((target_id, d, footprint.polygons),) for d in range(g)]
    for depth in range(1, limit + 1):
        deeper = []
        for history in level:
            if not within_budget(history):
                continue
            result = run(history)
            if result is None:
                continue
            current, steps, stalled = result
            target_poly = current.object(target_id).polygon
            if not stalled and not any(intersects(target_poly, p) for p in footprint.polygons) \
                    and subgoal_test(state, current, footprint):
                return current, [(object_id, directions[direction]) for object_id, direction, _ in history]
            if depth < limit:
                deeper.extend(expand(history, steps))
        level = deeper
    return None


def reference_plan(state, footprint, g, max_level):
    """(level, [(object_id, phi)]) of the first level whose sub-goals all clear, or None."""
    for level in range(max_level + 1):
        overlapping = overlapping_objects(state, footprint)
        if overlapping and level == 0:
            continue
        k = max(1, len(overlapping))
        committed, current, pushes = [], state, []
        while overlapping:
            for target in overlapping:
                found = reference_subgoal(current, target, footprint, level, g, committed, k)
                if found is not None:
                    break
            else:
                break
            current, sequence = found
            committed.extend(object_id for object_id, _ in sequence)
            pushes.extend(sequence)
            overlapping = overlapping_objects(current, footprint)
        if not overlapping and validate_terminal(current, footprint.polygons).is_valid:
            return level, pushes
    return None


def oracle_min_pushes(state, footprint, g, max_length):
    """Fewest unbounded pushes reaching a valid clear state, by exhaustive enumeration."""
    simulator = PushSimulator()
    actions = [(object_id, phi) for object_id in range(len(state)) for phi in push_directions(g)]
    if validate_terminal(state, footprint.polygons).is_valid:
        return 0
    for length in range(1, max_length + 1):
        for sequence in itertools.product(actions, repeat=length):
            current = state
            for object_id, phi in sequence:
                outcome = simulator.simulate_push(current, PushAction(object_id, phi), footprint.polygons)
                if outcome.termination == Termination.INFEASIBLE_PLACEMENT:
                    break
                current = outcome.new_state
            else:
                if validate_terminal(current, footprint.polygons).is_valid:
                    return length
    return None


class TestOverlapQueries(unittest.TestCase):
    """Test cases for overlapping_objects and subgoal_test."""

    def setUp(self):
        self.footprint = strip(10.0)

    def test_no_overlaps(self):
        self.assertEqual(overlapping_objects(make_state((19, 16)), self.footprint), [])

    def test_nearest_to_start_first(self):
        state = make_state((30, 10), (10, 10.5), (19, 16))
        self.assertEqual(overlapping_objects(state, self.footprint), [1, 0])

    def test_edge_contact_is_excluded(self):
        self.assertEqual(overlapping_objects(make_state((19, 11.75)), self.footprint), [])

    def test_subgoal_test_counts_net_overlaps(self):
        before = make_state((19, 10), (19, 14))
        cleared = before.with_poses({0: Pose2(25, 14, 0)})
        swapped = before.with_poses({0: Pose2(25, 14, 0), 1: Pose2(19, 10, 0)})
        self.assertTrue(subgoal_test(before, cleared, self.footprint))
        self.assertFalse(subgoal_test(before, swapped, self.footprint))
        self.assertFalse(subgoal_test(before, before, self.footprint))


class TestClearSubgoal(unittest.TestCase):
    """Test cases for the means-end sub-goal search."""

    def setUp(self):
        self.config = PlannerConfig(g=4, L_max=3, candidates_per_level=1)

    def test_single_push_clears_target(self):
        state = make_state((19, 10))
        footprint = strip(10.0)
        new_state, pushes = clear_subgoal(state, 0, footprint, 1, self.config)
        self.assertEqual(len(pushes), 1)
        action, outcome = pushes[0]
        self.assertEqual(action.object_id, 0)
        self.assertEqual(outcome.termination, Termination.CLEARED_FOOTPRINT)
        self.assertEqual(overlapping_objects(new_state, footprint), [])

    def test_blocker_is_pushed_first(self):
        # target on a low strip; pushing it up jams a movable blocker against an immovable
        state = make_state((19, 2.2), (19, 4.7), (19, 7.2, True))
        footprint = strip(2.0)
        self.assertIsNone(clear_subgoal(state, 0, footprint, 1, self.config))
        new_state, pushes = clear_subgoal(state, 0, footprint, 2, self.config)
        self.assertEqual([action.object_id for action, _ in pushes], [1, 0])
        self.assertAlmostEqual(pushes[0][0].phi, 0.0)
        self.assertAlmostEqual(pushes[1][0].phi, math.pi / 2)
        self.assertTrue(validate_terminal(new_state, footprint.polygons).is_valid)

    def test_blocker_under_the_pusher_is_pushed_first(self):
        state = pusher_blocked_state()
        footprint = strip(10.0)
        self.assertIsNone(clear_subgoal(state, 0, footprint, 1, self.config))
        new_state, pushes = clear_subgoal(state, 0, footprint, 2, self.config)
        self.assertEqual([action.object_id for action, _ in pushes], [1, 0])
        self.assertAlmostEqual(pushes[0][0].phi, math.pi)
        self.assertAlmostEqual(pushes[1][0].phi, math.pi / 2)
        self.assertEqual(pushes[0][1].termination, Termination.CLEARED_FOOTPRINT)
        self.assertTrue(validate_terminal(new_state, footprint.polygons).is_valid)

    def test_walled_in_target_fails(self):
        state = make_state((19, 10), (16.5, 10, True), (21.5, 10, True), (19, 12.5, True), (19, 7.5, True))
        monitor = SearchMonitor()
        self.assertIsNone(clear_subgoal(state, 0, strip(10.0), 3, self.config, monitor=monitor))
        summary = monitor.summary()
        self.assertEqual(summary['nodes_per_level'], {1: 4})
        self.assertEqual(summary['terminations'], {'INFEASIBLE_PLACEMENT': 4})
        self.assertEqual(summary['bound_violations'], [])

    def test_depth_limit_must_be_positive(self):
        with self.assertRaises(ValueError):
            clear_subgoal(make_state((19, 10)), 0, strip(10.0), 0, self.config)


class TestPlanClearPath(unittest.TestCase):
    """Test cases for iterative-deepening planning and replay."""

    def setUp(self):
        self.config = PlannerConfig(g=4, L_max=3, candidates_per_level=1)

    def test_clear_footprint_needs_no_pushes(self):
        plan = plan_clear_path(make_scenario(make_state((19, 16))), [strip(10.0)], self.config)
        self.assertEqual(plan.pushes, ())
        self.assertEqual(plan.levels_used, 0)

    def test_two_first_level_overlaps(self):
        scenario = make_scenario(make_state((10, 10), (25, 10)))
        footprint = strip(10.0)
        plan = plan_clear_path(scenario, [footprint], self.config)
        self.assertEqual(plan.levels_used, 1)
        self.assertEqual([action.object_id for action, _ in plan.pushes], [0, 1])
        self.assertTrue(validate_terminal(plan.final_state, footprint.polygons).is_valid)

    def test_push_count_matches_exhaustive_oracle(self):
        scenes = [
            (make_state((10, 10), (25, 10), (19, 16)), strip(10.0)),
            (make_state((19, 2.2), (19, 4.7), (19, 7.2, True)), strip(2.0)),
            (pusher_blocked_state(), strip(10.0)),
            (second_target_first_state(), strip(10.0)),
        ]
        for state, footprint in scenes:
            plan = plan_clear_path(make_scenario(state), [footprint], self.config)
            self.assertIsNotNone(plan)
            self.assertEqual(plan.push_count, oracle_min_pushes(state, footprint, 4, 3))

    def test_pusher_blocked_target_needs_two_levels(self):
        plan = plan_clear_path(make_scenario(pusher_blocked_state()), [strip(10.0)], self.config)
        self.assertEqual(plan.levels_used, 2)
        self.assertEqual([action.object_id for action, _ in plan.pushes], [1, 0])

    def test_other_overlapping_object_cleared_first(self):
        footprint = strip(10.0)
        state = second_target_first_state()
        self.assertEqual(overlapping_objects(state, footprint), [0, 1])
        self.assertIsNone(clear_subgoal(state, 0, footprint, 1, self.config))
        plan = plan_clear_path(make_scenario(state), [footprint], self.config)
        self.assertEqual(plan.levels_used, 1)
        self.assertEqual([(action.object_id, action.phi) for action, _ in plan.pushes],
                         [(1, math.pi / 2), (0, math.pi / 2)])
        self.assertTrue(validate_terminal(plan.final_state, footprint.polygons).is_valid)

    def test_plans_use_the_fewest_levels(self):
        scenes = [
            (make_state((19, 2.2), (19, 4.7), (19, 7.2, True)), strip(2.0)),
            (pusher_blocked_state(), strip(10.0)),
            (make_state((10, 10), (25, 10)), strip(10.0)),
        ]
        for state, footprint in scenes:
            plan = plan_clear_path(state, [footprint], self.config)
            self.assertGreaterEqual(plan.levels_used, 1)
            if plan.levels_used == 1:
                self.assertNotEqual(overlapping_objects(state, footprint), [])
                continue
            shallower = PlannerConfig(g=4, L_max=plan.levels_used - 1, candidates_per_level=1)
            self.assertIsNone(plan_clear_path(state, [footprint], shallower))

    def test_matches_reference_enumeration_on_random_scenes(self):
        room = Room(0, 0, 9, 7)
        footprint = strip(3.5, 0.5, 8.5)
        rng = np.random.default_rng(11)
        solved = 0
        for index in range(60):
            state = random_small_state(rng, room)
            with self.subTest(scene=index):
                plan = plan_clear_path(state, [footprint], self.config)
                expected = reference_plan(state, footprint, 4, 3)
                if expected is None:
                    self.assertIsNone(plan)
                    continue
                solved += 1
                level, pushes = expected
                self.assertIsNotNone(plan)
                self.assertEqual(plan.levels_used, level)
                self.assertEqual([(action.object_id, action.phi) for action, _ in plan.pushes], pushes)
                self.assertTrue(validate_terminal(plan.final_state, footprint.polygons).is_valid)
                if level >= 2:
                    shallower = PlannerConfig(g=4, L_max=level - 1, candidates_per_level=1)
                    self.assertIsNone(plan_clear_path(state, [footprint], shallower))
        self.assertGreater(solved, 0)

    def test_replay_reproduces_final_state(self):
        scenario = make_scenario(make_state((19, 2.2), (19, 4.7), (19, 7.2, True)))
        plan = plan_clear_path(scenario, [strip(2.0)], self.config)
        replayed = replay_plan(scenario.state, plan)
        self.assertEqual(replayed.pose_signature(), plan.final_state.pose_signature())

    def test_one_push_per_object_budget(self):
        scenario = make_scenario(make_state((19, 2.2), (19, 4.7), (19, 7.2, True)))
        config = PlannerConfig(g=4, L_max=3, candidates_per_level=1, k_pushes_per_object=1)
        plan = plan_clear_path(scenario, [strip(2.0)], config)
        counts = {}
        for action, _ in plan.pushes:
            counts[action.object_id] = counts.get(action.object_id, 0) + 1
        self.assertTrue(all(count == 1 for count in counts.values()))

    def test_unsolvable_returns_none(self):
        state = make_state((19, 10), (16.5, 10, True), (21.5, 10, True), (19, 12.5, True), (19, 7.5, True))
        self.assertIsNone(plan_clear_path(make_scenario(state), [strip(10.0)],
                                          PlannerConfig(g=4, L_max=2, candidates_per_level=1)))

    def test_config_validation(self):
        with self.assertRaises(ValueError):
            PlannerConfig(g=0)
        with self.assertRaises(ValueError):
            PlannerConfig(k_pushes_per_object=0)


class TestPlannerSelection(unittest.TestCase):
    """Test cases for planner dispatch and the fallback cascade."""

    def setUp(self):
        self.scenario = make_scenario(make_state((19, 16)))
        self.endpoints = (Pose2(1.5, 5.0, 0), Pose2(36.5, 5.0, 0))

    def test_planner_names(self):
        self.assertEqual(PlannerKind.from_name('rrt'), PlannerKind.RRT_CONNECT)
        self.assertEqual(PlannerKind.from_name('mincol'), PlannerKind.MIN_COLLISION)
        self.assertEqual(PlannerKind.from_name('straight_line'), PlannerKind.STRAIGHT_LINE)
        with self.assertRaises(ValueError):
            PlannerKind.from_name('bogus')

    def test_cascade_prefers_collision_free_path(self):
        kind, plan = plan_cascade(self.scenario, self.endpoints)
        self.assertEqual(kind, PlannerKind.RRT_CONNECT)
        self.assertEqual(plan.pushes, ())
        self.assertEqual(plan.footprint.kind, FootprintKind.SWEPT_BODY)
        self.assertEqual(plan.planner, 'RRT_CONNECT')

    def test_min_collision_without_clutter(self):
        plan = plan_with(PlannerKind.MIN_COLLISION, self.scenario, self.endpoints)
        self.assertEqual(plan.planner, 'MIN_COLLISION')
        self.assertEqual(plan.footprint.shrink_iterations, 0)
        self.assertEqual(plan.push_count, 0)

    def test_straight_line_plan_is_valid(self):
        scenario = make_scenario(make_state((10, 10), (25, 10)))
        plan = plan_with(PlannerKind.STRAIGHT_LINE, scenario, (Pose2(1.5, 10, 0), Pose2(36.5, 10, 0)))
        self.assertIsNotNone(plan)
        self.assertEqual(plan.footprint.kind, FootprintKind.STRAIGHT_LINE)
        self.assertTrue(validate_terminal(plan.final_state, plan.footprint.polygons).is_valid)

    def test_min_collision_succeeds_where_straight_line_does(self):
        endpoints = (Pose2(1.5, 10, 0), Pose2(36.5, 10, 0))
        scenes = [((10, 10), (25, 10)), ((19, 10),), ((8, 9), (19, 11), (30, 10)), ((12, 10), (14.5, 10.5))]
        straight_successes = 0
        for placements in scenes:
            scenario = make_scenario(make_state(*placements))
            with self.subTest(placements=placements):
                straight = plan_with(PlannerKind.STRAIGHT_LINE, scenario, endpoints)
                mincol = plan_with(PlannerKind.MIN_COLLISION, scenario, endpoints)
                if straight is not None:
                    straight_successes += 1
                    self.assertIsNotNone(mincol)
                    self.assertTrue(validate_terminal(mincol.final_state, mincol.footprint.polygons).is_valid)
        self.assertGreater(straight_successes, 0)


if __name__ == '__main__':
    unittest.main()
