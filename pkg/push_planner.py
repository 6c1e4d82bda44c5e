"""
Path-clearing push planner.

Each object overlapping a path footprint is a sub-goal. A sub-goal is
solved by breadth-first search over push sequences: first every direction
on the target, then, for pushes stopped by a pushed object or whose pusher
would land on a movable object, pushes of that blocker inserted ahead of
the blocked push (means-end analysis).
An iterative-deepening loop raises the allowed depth from 0 to L_max over
the ranked footprint candidates, so shallower plans are always found first.
"""
import math
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from config import (PUSH_DIRECTIONS, MAX_TREE_LEVEL, CANDIDATES_PER_LEVEL, RETRY_ALL_DIRECTIONS,
                    Settings)
from errors import Deadline, InvalidEndpoints
from geometry import intersects, swept_footprint, transform
from path_planners import (FootprintKind, PathFootprint, RrtParams, rrt_connect, sample_straight_path,
                           shrink_and_plan)
from push_budget import PushBudget
from push_physics import PushAction, PushSimulator, Termination, push_corridor, push_directions
from validation import ConfigValidator, validate_terminal


class PlannerKind(str, Enum):
    RRT_CONNECT = 'RRT_CONNECT'
    STRAIGHT_LINE = 'STRAIGHT_LINE'
    MIN_COLLISION = 'MIN_COLLISION'

    @classmethod
    def from_name(cls, name):
        aliases = {'rrt': cls.RRT_CONNECT, 'straight': cls.STRAIGHT_LINE, 'mincol': cls.MIN_COLLISION}
        return aliases.get(name.lower()) or cls(name.upper())


@dataclass(frozen=True)
class PlannerConfig:
    g: int = PUSH_DIRECTIONS
    L_max: int = MAX_TREE_LEVEL
    candidates_per_level: int = CANDIDATES_PER_LEVEL
    k_pushes_per_object: int = None  # None: initial overlapping count of each footprint
    retry_all_directions: bool = RETRY_ALL_DIRECTIONS

    def __post_init__(self):
        is_valid, message = ConfigValidator.validate_planner_config(self)
        if not is_valid:
            raise ValueError(message)

    @classmethod
    def from_settings(cls, settings):
        return cls(settings.push_directions, settings.max_tree_level, settings.candidates_per_level,
                   settings.k_pushes_per_object, settings.retry_all_directions)


@dataclass(frozen=True)
class SearchNode:
    """
    A push sequence for one sub-goal; the last push is the target push.

    Each entry of push_history is (object_id, direction index, footprint
    token): token 0 is the path footprint, other tokens name the regions a
    blocker must leave (push corridors or blocked pusher placements)
    registered during the search.
    """

    state: object
    depth: int
    push_history: tuple
    target_id: int
    outcomes: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class PushPlan:
    footprint: PathFootprint
    pushes: tuple  # ((PushAction, PushOutcome), ...)
    final_state: object
    levels_used: int = 0
    planner: str = None

    @property
    def push_count(self):
        return len(self.pushes)


def _footprint_polygons(footprint):
    return footprint.polygons if isinstance(footprint, PathFootprint) else tuple(footprint)


def overlapping_objects(state, footprint):
    """
    Ids of objects intersecting any footprint polygon, nearest to the
    footprint's start first (ties by id). Plain polygon lists are ordered by id.
    """
    polys = _footprint_polygons(footprint)
    hits = [obj for obj in state.objects if any(intersects(obj.polygon, p) for p in polys)]
    if isinstance(footprint, PathFootprint):
        start = footprint.start
        hits.sort(key=lambda obj: (math.hypot(obj.pose.x - start.x, obj.pose.y - start.y), obj.id))
    return [obj.id for obj in hits]


def subgoal_test(before, after, footprint):
    """True iff after has fewer footprint overlaps than before and is collision-free in the room."""
    if len(overlapping_objects(after, footprint)) >= len(overlapping_objects(before, footprint)):
        return False
    report = validate_terminal(after, ())
    return report.is_valid


class SubgoalSearch:
    """
    Level-limited breadth-first means-end search clearing one object.
    """

    def __init__(self, state, target_id, footprint, depth_limit, config, simulator,
                 budget=None, monitor=None, deadline=None):
        self.entry_state = state
        self.target_id = target_id
        self.footprint = footprint
        self.depth_limit = depth_limit
        self.config = config
        self.simulator = simulator
        self.budget = budget
        self.monitor = monitor
        self.deadline = deadline or Deadline.unbounded()
        self.directions = push_directions(config.g)
        self.footprints = [_footprint_polygons(footprint)]
        self._prefix_cache = {(): (state, (), False)}
        self.monitor_key = None
        if monitor is not None:
            n = len(overlapping_objects(state, footprint))
            self.monitor_key = monitor.begin_subgoal(target_id, n, config.g, depth_limit)

    def _replay(self, history):
        """
        State after a push sequence, reusing evaluated prefixes.

        Returns (state, outcomes, stalled). A push whose pusher lands on a
        movable object stalls the sequence: it is recorded and the pushes
        after it are not simulated. None if a push is infeasible outright.
        """
        if history in self._prefix_cache:
            return self._prefix_cache[history]
        previous = self._replay(history[:-1])
        if previous is None or previous[2]:
            self._prefix_cache[history] = previous
            return previous
        state, outcomes, _ = previous
        object_id, direction, token = history[-1]
        action = PushAction(object_id, self.directions[direction])
        outcome = self.simulator.simulate_push(state, action, self.footprints[token])
        if outcome.is_stalled:
            result = (state, outcomes + ((action, outcome),), True)
        elif outcome.termination == Termination.INFEASIBLE_PLACEMENT:
            result = None
        else:
            result = (outcome.new_state, outcomes + ((action, outcome),), False)
        self._prefix_cache[history] = result
        return result

    def _within_budget(self, history):
        return self.budget is None or self.budget.allows(object_id for object_id, _, _ in history)

    def _solved(self, state):
        target_poly = state.object(self.target_id).polygon
        if any(intersects(target_poly, p) for p in self.footprints[0]):
            return False
        return subgoal_test(self.entry_state, state, self.footprint)

    def _children(self, node):
        """
        Insert a push of the last blocking object ahead of the push it
        blocked. A stalled push is blocked where its pusher would stand;
        a push stopped by a pushed object is blocked along its corridor.
        """
        for index in range(len(node.outcomes) - 1, -1, -1):
            action, outcome = node.outcomes[index]
            if outcome.is_stalled:
                break
            if outcome.termination == Termination.WALL_CONTACT and outcome.blocking_id != action.object_id:
                break
        else:
            return []
        blocked_id, blocked_direction, blocked_token = node.push_history[index]
        if outcome.is_stalled:
            region = transform(self.simulator.pusher_shape, outcome.pusher_pose)
        else:
            before = self.entry_state if index == 0 else node.outcomes[index - 1][1].new_state
            region = push_corridor(before, blocked_id, action.phi)
        self.footprints.append((region,))
        region_token = len(self.footprints) - 1

        retry = range(self.config.g) if self.config.retry_all_directions else [blocked_direction]
        children = []
        for blocker_direction in range(self.config.g):
            for direction in retry:
                history = (node.push_history[:index]
                           + ((outcome.blocking_id, blocker_direction, region_token),
                              (blocked_id, direction, blocked_token))
                           + node.push_history[index + 1:])
                children.append(history)
        return children

    def run(self):
        """
        Returns:
            (state, ((PushAction, PushOutcome), ...)) for the shallowest
            solution in enumeration order, or None when the tree is exhausted
        """
        frontier = deque(((self.target_id, d, 0),) for d in range(self.config.g))
        while frontier:
            history = frontier.popleft()
            self.deadline.check('in sub-goal search')
            if not self._within_budget(history):
                continue
            depth = len(history)
            if self.monitor is not None:
                self.monitor.record_node(self.monitor_key, depth)
            result = self._replay(history)
            if result is None:
                continue
            state, outcomes, stalled = result
            if not stalled and self._solved(state):
                return state, outcomes
            if depth < self.depth_limit:
                node = SearchNode(state, depth, history, self.target_id, outcomes)
                frontier.extend(self._children(node))
        return None


def clear_subgoal(state, target_id, footprint, depth_limit, config=None, simulator=None,
                  budget=None, monitor=None, deadline=None):
    """
    Search for pushes that take target_id off the footprint without
    increasing the overlap count elsewhere.

    Returns:
        (WorldState, tuple of (PushAction, PushOutcome)) or None
    """
    if depth_limit < 1:
        raise ValueError(f"depth_limit must be at least 1, got {depth_limit}")
    config = config or PlannerConfig()
    simulator = simulator or PushSimulator(monitor=monitor)
    search = SubgoalSearch(state, target_id, footprint, depth_limit, config, simulator,
                           budget, monitor, deadline)
    return search.run()


def plan_clear_path(scenario, footprints, config=None, simulator=None, monitor=None,
                    deadline=None, logger=None):
    """
    Iterative-deepening push planning over ranked footprint candidates.

    For L = 0..L_max and each of the first candidates_per_level footprints,
    sub-goals are solved from the running state with depth limit L,
    nearest object first and the next one whenever an object cannot be
    cleared. The first footprint whose sub-goals all succeed wins.

    Args:
        scenario: Scenario (or WorldState) to clear
        footprints: PathFootprints ranked best-first

    Returns:
        PushPlan, or None when no (level, footprint) pair succeeds
    """
    if not footprints:
        raise ValueError("need at least one footprint")
    config = config or PlannerConfig()
    simulator = simulator or PushSimulator(monitor=monitor)
    deadline = deadline or Deadline.unbounded()
    initial = getattr(scenario, 'state', scenario)
    candidates = list(footprints)[:config.candidates_per_level]

    for level in range(config.L_max + 1):
        for rank, footprint in enumerate(candidates):
            deadline.check('in push planning')
            plan = _plan_footprint(initial, footprint, level, config, simulator, monitor, deadline, logger)
            if plan is not None:
                logging.info(f"Plan found: level {level}, candidate {rank}, {plan.push_count} pushes")
                return plan
        logging.debug(f"No plan with level {level} over {len(candidates)} candidates")
    return None


def _plan_footprint(initial, footprint, level, config, simulator, monitor, deadline, logger):
    overlapping = overlapping_objects(initial, footprint)
    if overlapping and level == 0:
        return None
    k = config.k_pushes_per_object or max(1, len(overlapping))
    budget = PushBudget(k)
    state = initial
    pushes = ()
    while overlapping:
        # nearest object first; the others are tried when it cannot be cleared
        for target in overlapping:
            result = clear_subgoal(state, target, footprint, level, config, simulator, budget, monitor, deadline)
            if logger:
                logger.log_subgoal(target, level, result is not None, len(result[1]) if result else 0)
            if result is not None:
                break
        else:
            logging.debug(f"Level {level}: none of {overlapping} can be cleared, budget {budget.get_status()}")
            return None
        state, sequence = result
        budget.commit(action.object_id for action, _ in sequence)
        pushes += sequence
        logging.debug(f"Object {target} cleared with {len(sequence)} pushes, "
                      f"{budget.remaining(target)} pushes of it left")
        overlapping = overlapping_objects(state, footprint)
    report = validate_terminal(state, footprint.polygons)
    if not report.is_valid:
        if logger:
            logger.log_validation_error('terminal_state', report.describe(), level=level)
        return None
    return PushPlan(footprint, pushes, state, level)


def replay_plan(initial_state, plan, simulator=None):
    """Re-run the plan's recorded pushes by realized distance; returns the final state."""
    simulator = simulator or PushSimulator()
    state = initial_state
    for action, outcome in plan.pushes:
        state = simulator.replay_push(state, action.object_id, action.phi, outcome.realized_distance).new_state
    return state


def planner_rng(scenario, settings):
    return np.random.default_rng((int(scenario.seed), int(settings.rrt_seed)))


def plan_with(kind, scenario, endpoints, settings=None, simulator=None, monitor=None,
              deadline=None, logger=None):
    """
    Run one planner on a scenario from shared endpoints.

    Returns:
        PushPlan (tagged with the planner name), or None
    """
    kind = PlannerKind(kind)
    settings = settings or Settings()
    config = PlannerConfig.from_settings(settings)
    params = RrtParams.from_settings(settings)
    simulator = simulator or PushSimulator(push_step=settings.push_step, monitor=monitor)
    deadline = deadline or Deadline.unbounded()
    start, goal = endpoints
    state = scenario.state

    if kind == PlannerKind.RRT_CONNECT:
        try:
            waypoints = rrt_connect(state, scenario.agent_shape, start, goal, params, deadline)
        except InvalidEndpoints as e:
            logging.warning(f"RRT-Connect endpoints invalid: {e}")
            return None
        if waypoints is None:
            return None
        footprint = PathFootprint(FootprintKind.SWEPT_BODY, tuple(swept_footprint(scenario.agent_shape, waypoints)),
                                  start, goal, 0, waypoints=tuple(waypoints))
        if logger:
            logger.log_path(footprint.kind.value, 0)
        return PushPlan(footprint, (), state, 0, kind.value)

    if kind == PlannerKind.STRAIGHT_LINE:
        footprints = _straight_candidates(scenario, endpoints, settings, config)
        if logger:
            logger.log_path(footprints[0].kind.value, overlap=footprints[0].overlap)
    else:
        # the minimal-collision sweep leads; the straight candidates follow it on every level
        footprints = _straight_candidates(scenario, endpoints, settings, config)
        footprint = shrink_and_plan(state, scenario.agent_shape, start, goal, params, deadline, logger)
        if footprint is None:
            logging.info("No minimal-collision path; planning over straight candidates only")
        else:
            footprints = [footprint] + footprints
        config = replace(config, candidates_per_level=len(footprints))

    plan = plan_clear_path(scenario, footprints, config, simulator, monitor, deadline, logger)
    return None if plan is None else replace(plan, planner=kind.value)


def _straight_candidates(scenario, endpoints, settings, config):
    return sample_straight_path(scenario.state, scenario.straight_path_shape, config.candidates_per_level,
                                planner_rng(scenario, settings), agent_shape=scenario.agent_shape,
                                endpoints=endpoints, resolution=settings.grid_resolution)


def plan_cascade(scenario, endpoints, settings=None, simulator=None, monitor=None, deadline=None, logger=None):
    """
    Collision-free RRT-Connect first, then the straight-line push planner,
    then the minimal-collision push planner.

    Returns:
        (PlannerKind, PushPlan) or (None, None)
    """
    for kind in (PlannerKind.RRT_CONNECT, PlannerKind.STRAIGHT_LINE, PlannerKind.MIN_COLLISION):
        plan = plan_with(kind, scenario, endpoints, settings, simulator, monitor, deadline, logger)
        if plan is not None:
            return kind, plan
    return None, None
