"""
World model for the push planners: the room, movable objects, world states
and benchmark scenarios, plus the jittered-lattice clutter generator.
"""
import math
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from config import (ROOM_WIDTH, ROOM_HEIGHT, NUM_SQUARES, LATTICE_COLUMNS, LATTICE_ROWS,
                    LATTICE_JITTER, PLACEMENT_ATTEMPTS, AGENT_LENGTH, AGENT_WIDTH,
                    PATH_LENGTH, PATH_WIDTH, GEOMETRY_TOLERANCE)
from errors import OverlappingInput, PlacementFailed, UnknownObject
from geometry import ConvexPolygon, Pose2, transform, intersects, contains_in_room
from validation import ConfigValidator


@dataclass(frozen=True)
class Room:
    """Axis-aligned rectangular room, bounds in cm."""

    x_min: float = 0.0
    y_min: float = 0.0
    x_max: float = ROOM_WIDTH
    y_max: float = ROOM_HEIGHT

    def __post_init__(self):
        for name in ('x_min', 'y_min', 'x_max', 'y_max'):
            object.__setattr__(self, name, float(getattr(self, name)))
        is_valid, message = ConfigValidator.validate_room(self)
        if not is_valid:
            raise ValueError(message)

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def height(self):
        return self.y_max - self.y_min

    @property
    def area(self):
        return self.width * self.height

    @property
    def diagonal(self):
        return math.hypot(self.width, self.height)


@dataclass(frozen=True)
class MovableObject:
    """An object shape in its local frame (centroid at the origin) placed at pose."""

    id: int
    shape: ConvexPolygon
    pose: Pose2
    immovable: bool = False

    def __post_init__(self):
        cx, cy = self.shape.centroid
        if abs(cx) > GEOMETRY_TOLERANCE or abs(cy) > GEOMETRY_TOLERANCE:
            raise ValueError(f"Object {self.id}: shape centroid ({cx}, {cy}) is not at the origin")

    @cached_property
    def polygon(self):
        """Shape placed at the object's pose."""
        return transform(self.shape, self.pose)

    def moved_to(self, pose):
        return replace(self, pose=pose)


@dataclass(frozen=True)
class WorldState:
    """Poses of every object in the room; objects ordered by id from 0."""

    room: Room
    objects: tuple = ()

    def __post_init__(self):
        objects = tuple(self.objects)
        object.__setattr__(self, 'objects', objects)
        ids = [obj.id for obj in objects]
        if ids != list(range(len(objects))):
            raise ValueError(f"Object ids must be contiguous from 0 in order, got {ids}")

    def __len__(self):
        return len(self.objects)

    def object(self, object_id):
        if not isinstance(object_id, (int, np.integer)) or not 0 <= object_id < len(self.objects):
            raise UnknownObject(f"no object with id {object_id!r}")
        return self.objects[object_id]

    def polygons(self):
        return [obj.polygon for obj in self.objects]

    def with_poses(self, poses):
        """Copy with the given {id: Pose2} updates applied."""
        for object_id in poses:
            self.object(object_id)
        objects = tuple(obj.moved_to(poses[obj.id]) if obj.id in poses else obj
                        for obj in self.objects)
        return WorldState(self.room, objects)

    def pose_signature(self):
        """Exact pose tuples for bit-identical state comparison."""
        return tuple(obj.pose.as_tuple() for obj in self.objects)


def _object_area_ratio(state):
    return sum(obj.shape.area for obj in state.objects) / state.room.area


@dataclass(frozen=True)
class Scenario:
    """A seeded world plus the agent body and straight-path shape every planner consumes."""

    seed: int
    state: WorldState
    agent_shape: ConvexPolygon
    straight_path_shape: ConvexPolygon
    clutter: float = field(default=None)

    def __post_init__(self):
        ratio = _object_area_ratio(self.state)
        if self.clutter is None:
            object.__setattr__(self, 'clutter', clutter_percentage(self.state))
        elif abs(self.clutter - ratio) > 1e-6:
            raise ValueError(f"Scenario clutter {self.clutter} does not match object area ratio {ratio}")

    @property
    def room(self):
        return self.state.room


def default_agent_shape():
    """Agent body: width along local x, length along local y."""
    return ConvexPolygon.rectangle(AGENT_WIDTH, AGENT_LENGTH)


def default_path_shape():
    return ConvexPolygon.rectangle(PATH_LENGTH, PATH_WIDTH)


def clutter_percentage(state):
    """
    Fraction of the room area covered by objects.

    Raises:
        OverlappingInput: two objects intersect
    """
    polys = state.polygons()
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if intersects(polys[i], polys[j]):
                raise OverlappingInput(f"objects {i} and {j} intersect")
    return _object_area_ratio(state)


def square_side_for_clutter(clutter_percent, room=None, count=NUM_SQUARES):
    """Side length giving count equal squares the requested clutter percentage."""
    room = room or Room()
    return math.sqrt(clutter_percent / 100.0 * room.area / count)


def generate_scenario(seed, square_side, room=None, columns=LATTICE_COLUMNS, rows=LATTICE_ROWS,
                      jitter=LATTICE_JITTER, attempts=PLACEMENT_ATTEMPTS):
    """
    Place columns x rows axis-aligned squares on a jittered lattice.

    Each square starts at its lattice cell center and is shifted by a uniform
    jitter of up to `jitter` of the cell per axis, limited so it stays inside
    its own cell. Placements hitting a wall or an earlier square are re-drawn.

    Args:
        seed: PRNG seed; identical seeds give identical scenarios
        square_side: Square side length in cm
        room: Room, defaults to the 38x19 cm benchmark room

    Returns:
        Scenario with computed clutter

    Raises:
        PlacementFailed: a square could not be placed within `attempts` draws
    """
    if square_side <= 0:
        raise ValueError(f"square_side must be positive, got {square_side}")
    room = room or Room()
    rng = np.random.default_rng(seed)
    shape = ConvexPolygon.square(square_side)
    cell_w, cell_h = room.width / columns, room.height / rows
    jitter_x = max(0.0, min(jitter * cell_w, (cell_w - square_side) / 2.0))
    jitter_y = max(0.0, min(jitter * cell_h, (cell_h - square_side) / 2.0))

    objects = []
    for row in range(rows):
        for col in range(columns):
            cx = room.x_min + (col + 0.5) * cell_w
            cy = room.y_min + (row + 0.5) * cell_h
            for _ in range(attempts):
                pose = Pose2(cx + rng.uniform(-jitter_x, jitter_x), cy + rng.uniform(-jitter_y, jitter_y), 0.0)
                placed = transform(shape, pose)
                if contains_in_room(placed, room) and not any(intersects(placed, o.polygon) for o in objects):
                    objects.append(MovableObject(len(objects), shape, pose))
                    break
            else:
                raise PlacementFailed(f"square {len(objects)} (side {square_side:.3f} cm) "
                                      f"not placed after {attempts} attempts, seed {seed}")

    state = WorldState(room, tuple(objects))
    scenario = Scenario(seed, state, default_agent_shape(), default_path_shape())
    logging.info(f"Generated scenario seed={seed}: {len(objects)} squares of {square_side:.3f} cm, "
                 f"clutter={scenario.clutter:.1%}")
    return scenario
