"""
Candidate path footprints for the push planner.

Two sources: straight start-to-goal strips ranked by how much clutter they
cover (occupancy convolution), and RRT-Connect paths for the agent body in
SE(2), with the body shrunk step by step when no collision-free path exists.
"""
import math
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from config import (ENDPOINT_BAND, ENDPOINT_ATTEMPTS, GRID_RESOLUTION, RRT_MAX_NODES,
                    RRT_STEP_SIZE, RRT_GOAL_BIAS, RRT_SEED, RRT_ANGLE_WEIGHT, SHORTCUT_ATTEMPTS,
                    SHRINK_FACTOR, MIN_AREA_FRACTION)
from errors import Deadline, InvalidEndpoints, SamplingExhausted
from geometry import (ConvexPolygon, Pose2, transform, intersects, contains_in_room, rasterize,
                      placement_kernel, overlap_score, interpolate_poses, interpolation_steps,
                      swept_footprint, angle_difference)
from validation import ConfigValidator
from world import Room


class FootprintKind(str, Enum):
    STRAIGHT_LINE = 'STRAIGHT_LINE'
    SWEPT_BODY = 'SWEPT_BODY'


@dataclass(frozen=True)
class PathFootprint:
    """Region that must be emptied of objects for the agent to pass."""

    kind: FootprintKind
    polygons: tuple
    start: Pose2
    goal: Pose2
    shrink_iterations: int = 0
    overlap: float = None  # cm^2 of clutter covered when ranked
    waypoints: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'kind', FootprintKind(self.kind))
        object.__setattr__(self, 'polygons', tuple(self.polygons))
        object.__setattr__(self, 'waypoints', tuple(self.waypoints))
        if not self.polygons:
            raise ValueError("footprint needs at least one polygon")
        if self.shrink_iterations < 0:
            raise ValueError(f"shrink_iterations must be >= 0, got {self.shrink_iterations}")
        if self.kind == FootprintKind.STRAIGHT_LINE and (len(self.polygons) != 1 or self.shrink_iterations):
            raise ValueError("straight-line footprints are one rectangle with no shrinking")


@dataclass(frozen=True)
class RrtParams:
    max_nodes: int = RRT_MAX_NODES
    step_size: float = RRT_STEP_SIZE
    goal_bias: float = RRT_GOAL_BIAS
    rng_seed: int = RRT_SEED
    angle_weight: float = RRT_ANGLE_WEIGHT
    shortcut_attempts: int = SHORTCUT_ATTEMPTS

    def __post_init__(self):
        is_valid, message = ConfigValidator.validate_rrt_params(self)
        if not is_valid:
            raise ValueError(message)

    @classmethod
    def from_settings(cls, settings):
        return cls(settings.rrt_max_nodes, settings.rrt_step_size, settings.rrt_goal_bias,
                   settings.rrt_seed, settings.rrt_angle_weight, settings.shortcut_attempts)


def straight_footprint_polygon(start, goal, width):
    """Rectangle of the given width spanning start -> goal."""
    length = start.distance_to(goal)
    if length <= 0:
        raise ValueError("start and goal coincide")
    theta = math.atan2(goal.y - start.y, goal.x - start.x)
    center = Pose2((start.x + goal.x) / 2.0, (start.y + goal.y) / 2.0, theta)
    return transform(ConvexPolygon.rectangle(length, width), center)


def path_width_of(path_shape):
    """Short side of the straight-path shape."""
    x0, y0, x1, y1 = path_shape.bounds
    return min(x1 - x0, y1 - y0)


def sample_endpoints(room, shape, rng, state=None, path_width=None,
                     band=ENDPOINT_BAND, attempts=ENDPOINT_ATTEMPTS):
    """
    Draw a start in the first `band` cm of the room's x-range and a goal in
    the last `band` cm, y uniform over the room, theta 0.

    A pair is kept when the shape fits inside the room at both ends, the
    straight strip between them fits too (when path_width is given), and the
    shape touches no object at either end (when state is given).

    Raises:
        SamplingExhausted: no acceptable pair within `attempts` draws
    """
    obstacles = state.polygons() if state is not None else []
    for _ in range(attempts):
        start = Pose2(rng.uniform(room.x_min, room.x_min + band), rng.uniform(room.y_min, room.y_max), 0.0)
        goal = Pose2(rng.uniform(room.x_max - band, room.x_max), rng.uniform(room.y_min, room.y_max), 0.0)
        placed = [transform(shape, start), transform(shape, goal)]
        if not all(contains_in_room(p, room) for p in placed):
            continue
        if path_width is not None and not contains_in_room(straight_footprint_polygon(start, goal, path_width), room):
            continue
        if any(intersects(p, o) for p in placed for o in obstacles):
            continue
        return start, goal
    raise SamplingExhausted(f"no valid start/goal pair after {attempts} attempts")


def sample_straight_path(state, path_shape, n_candidates, rng, agent_shape=None, endpoints=None,
                         resolution=GRID_RESOLUTION):
    """
    Straight-line footprint candidates ranked by clutter overlap, lowest first.

    Args:
        state: WorldState
        path_shape: Straight-path rectangle; its short side is the strip width
        n_candidates: Number of candidates to return
        rng: numpy Generator
        agent_shape: Shape that must fit at the endpoints (defaults to a square of the strip width)
        endpoints: Optional (start, goal) used as the first candidate
        resolution: Occupancy grid resolution (cm)

    Returns:
        list of PathFootprint sorted by overlap, ties in draw order
    """
    width = path_width_of(path_shape)
    shape = agent_shape or ConvexPolygon.square(width)
    pairs = [endpoints] if endpoints is not None else []
    while len(pairs) < n_candidates:
        pairs.append(sample_endpoints(state.room, shape, rng, path_width=width))
    pairs = pairs[:n_candidates]

    pad = 2 * resolution
    room = state.room
    padded = Room(room.x_min - pad, room.y_min - pad, room.x_max + pad, room.y_max + pad)
    grid = rasterize(state.polygons(), padded, resolution)

    scored = []
    for index, (start, goal) in enumerate(pairs):
        theta = math.atan2(goal.y - start.y, goal.x - start.x)
        local = ConvexPolygon.rectangle(start.distance_to(goal), width)
        center = Pose2((start.x + goal.x) / 2.0, (start.y + goal.y) / 2.0, theta)
        kernel = placement_kernel(grid, local, center)
        score = overlap_score(grid, kernel, center)
        footprint = PathFootprint(FootprintKind.STRAIGHT_LINE, (transform(local, center),), start, goal,
                                  overlap=score)
        scored.append((score, index, footprint))
    scored.sort(key=lambda item: (item[0], item[1]))
    logging.debug(f"Ranked {len(scored)} straight candidates, best overlap "
                  f"{scored[0][0] if scored else float('nan'):.3f} cm^2")
    return [footprint for _, _, footprint in scored]


class CollisionChecker:
    """Body-vs-scene collision queries with a bounding-circle prefilter."""

    def __init__(self, state, body):
        self.room = state.room
        self.body = body
        self.obstacles = state.polygons()
        self.centers = np.array([o.centroid for o in self.obstacles]).reshape(-1, 2)
        self.radii = np.array([np.max(np.linalg.norm(o.points - c, axis=1))
                               for o, c in zip(self.obstacles, self.centers)])
        self.body_radius = body.circumradius
        self.linear_step, self.angular_step = interpolation_steps(body)

    def is_free(self, pose):
        placed = transform(self.body, pose)
        if not contains_in_room(placed, self.room):
            return False
        if not self.obstacles:
            return True
        gaps = np.hypot(self.centers[:, 0] - pose.x, self.centers[:, 1] - pose.y)
        for index in np.nonzero(gaps < self.radii + self.body_radius)[0]:
            if intersects(placed, self.obstacles[index]):
                return False
        return True

    def motion_free(self, a, b):
        """Whether the body stays free along the interpolated motion a -> b (a excluded)."""
        return all(self.is_free(p) for p in interpolate_poses(a, b, self.linear_step, self.angular_step)[1:])

    def path_free(self, waypoints):
        return self.is_free(waypoints[0]) and all(self.motion_free(a, b) for a, b in zip(waypoints, waypoints[1:]))


class _Tree:
    """Pose tree with array storage for vectorized nearest-neighbour queries."""

    def __init__(self, root, capacity=1024):
        self.data = np.empty((capacity, 3))
        self.parents = np.empty(capacity, dtype=int)
        self.poses = []
        self.size = 0
        self.add(root, -1)

    def add(self, pose, parent):
        if self.size == len(self.data):
            self.data = np.vstack((self.data, np.empty_like(self.data)))
            self.parents = np.concatenate((self.parents, np.empty_like(self.parents)))
        self.data[self.size] = pose.as_tuple()
        self.parents[self.size] = parent
        self.poses.append(pose)
        self.size += 1
        return self.size - 1

    def nearest(self, pose, angle_weight):
        nodes = self.data[:self.size]
        dtheta = np.abs((nodes[:, 2] - pose.theta + np.pi) % (2 * np.pi) - np.pi)
        cost = np.hypot(nodes[:, 0] - pose.x, nodes[:, 1] - pose.y) + angle_weight * dtheta
        return int(np.argmin(cost))

    def branch(self, index):
        """Poses from node index back to the root."""
        poses = []
        while index >= 0:
            poses.append(self.poses[index])
            index = int(self.parents[index])
        return poses


_TRAPPED, _ADVANCED, _REACHED = 'TRAPPED', 'ADVANCED', 'REACHED'


class RrtConnectPlanner:
    """
    Bidirectional RRT for a rigid body in SE(2).

    Trees grow from start and goal; each round one tree extends toward a
    random sample and the other greedily connects to the new node. Sampling
    picks the other tree's root with probability goal_bias.
    """

    def __init__(self, state, body, params=None, deadline=None):
        self.state = state
        self.room = state.room
        self.params = params or RrtParams()
        self.checker = CollisionChecker(state, body)
        self.deadline = deadline or Deadline.unbounded()
        self.rng = np.random.default_rng(self.params.rng_seed)
        self.expansions = 0

    def distance(self, a, b):
        return a.distance_to(b) + self.params.angle_weight * abs(angle_difference(a.theta, b.theta))

    def steer(self, origin, target):
        d = self.distance(origin, target)
        if d <= self.params.step_size:
            return target
        f = self.params.step_size / d
        return Pose2(origin.x + f * (target.x - origin.x), origin.y + f * (target.y - origin.y),
                     origin.theta + f * angle_difference(origin.theta, target.theta))

    def _extend(self, tree, target):
        self.expansions += 1
        near = tree.nearest(target, self.params.angle_weight)
        new = self.steer(tree.poses[near], target)
        if not self.checker.motion_free(tree.poses[near], new):
            return _TRAPPED, None
        index = tree.add(new, near)
        return (_REACHED if new == target else _ADVANCED), index

    def _connect(self, tree, target):
        while True:
            status, index = self._extend(tree, target)
            if status != _ADVANCED or self.expansions >= self.params.max_nodes:
                return status, index

    def _sample(self, other_root):
        if self.rng.random() < self.params.goal_bias:
            return other_root
        return Pose2(self.rng.uniform(self.room.x_min, self.room.x_max),
                     self.rng.uniform(self.room.y_min, self.room.y_max),
                     self.rng.uniform(-math.pi, math.pi))

    def plan(self, start, goal):
        """
        Returns:
            list of Pose2 from start to goal, or None after max_nodes expansions

        Raises:
            InvalidEndpoints: start or goal in collision
            PlanningTimeout: deadline exhausted
        """
        if not self.checker.is_free(start) or not self.checker.is_free(goal):
            raise InvalidEndpoints(f"body collides at start {start.as_tuple()} or goal {goal.as_tuple()}")
        if self.checker.motion_free(start, goal):
            return [start, goal]

        start_tree = _Tree(start)
        trees = [start_tree, _Tree(goal)]
        while self.expansions < self.params.max_nodes:
            self.deadline.check('in RRT-Connect')
            a, b = trees
            status, index = self._extend(a, self._sample(b.poses[0]))
            if status != _TRAPPED:
                status_b, index_b = self._connect(b, a.poses[index])
                if status_b == _REACHED:
                    # root_a ... joint ... root_b; the joint appears in both trees
                    path = a.branch(index)[::-1] + b.branch(index_b)[1:]
                    if a is not start_tree:
                        path.reverse()
                    logging.debug(f"RRT-Connect joined trees after {self.expansions} expansions")
                    return self.shortcut(path)
            trees.reverse()
        logging.debug(f"RRT-Connect gave up after {self.expansions} expansions")
        return None

    def shortcut(self, waypoints):
        return shortcut_path(waypoints, self.checker, self.rng, self.params.shortcut_attempts)


def shortcut_path(waypoints, checker, rng, attempts=SHORTCUT_ATTEMPTS):
    """Greedy smoothing: replace random sub-paths by direct collision-free motions."""
    path = list(waypoints)
    for _ in range(attempts):
        if len(path) < 3:
            break
        i, j = sorted(rng.choice(len(path), size=2, replace=False))
        if j - i < 2:
            continue
        if checker.motion_free(path[i], path[j]):
            path = path[:i + 1] + path[j:]
    return path


def rrt_connect(state, body, start, goal, params=None, deadline=None):
    """Collision-free waypoints for body from start to goal, or None."""
    return RrtConnectPlanner(state, body, params, deadline).plan(start, goal)


def shrink_schedule(factor=SHRINK_FACTOR, min_fraction=MIN_AREA_FRACTION):
    """Linear scale per shrink iteration until the area drops below min_fraction."""
    scales = []
    i = 0
    while factor ** i >= min_fraction:
        scales.append(factor ** (i / 2.0))
        i += 1
    return scales


def shrink_and_plan(state, body, start, goal, params=None, deadline=None, logger=None):
    """
    RRT-Connect with iterative body shrinking.

    Iteration i plans for the body scaled to area factor 0.9**i. The first
    success is returned as the full-size body swept along the reduced body's
    waypoints. Iterations where the scaled body collides at an endpoint are
    skipped.

    Returns:
        PathFootprint (SWEPT_BODY), or None when even the point-sized body fails
    """
    params = params or RrtParams()
    for i, scale in enumerate(shrink_schedule()):
        reduced = body.scaled(scale)
        iteration_params = RrtParams(params.max_nodes, params.step_size, params.goal_bias,
                                     params.rng_seed + i, params.angle_weight, params.shortcut_attempts)
        planner = RrtConnectPlanner(state, reduced, iteration_params, deadline)
        if not (planner.checker.is_free(start) and planner.checker.is_free(goal)):
            logging.debug(f"Shrink iteration {i}: endpoints blocked at scale {scale:.3f}")
            continue
        waypoints = planner.plan(start, goal)
        if waypoints is None:
            continue
        footprint = PathFootprint(FootprintKind.SWEPT_BODY, tuple(swept_footprint(body, waypoints)),
                                  start, goal, shrink_iterations=i, waypoints=tuple(waypoints))
        if logger:
            logger.log_path(footprint.kind.value, shrink_iterations=i)
        return footprint
    logging.info("Shrinking reached the point-robot limit without a path")
    return None
