"""
Deterministic quasi-static push simulation.

Pushed objects translate along the push direction in steps of push_step,
never rotate, and stop the instant pushing stops. Objects touched by the
pushed set join it and move rigidly with it. A push ends when a pushed
object would leave the room or hit an immovable object (WALL_CONTACT),
when the target has left the footprint (CLEARED_FOOTPRINT), or when the
distance cap is reached (MAX_DISTANCE).

The engine does not walk every step: translation windows give the next
step at which anything happens, and each event step is confirmed with the
same intersection and containment predicates a step-by-step loop would
evaluate, so results match naive stepping exactly.
"""
import math
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from config import PUSH_STEP, PUSHER_THICKNESS, PUSHER_WIDTH, PUSHER_RETREAT_STEP
from geometry import (ConvexPolygon, Pose2, transform, intersects, contains_in_room,
                      translation_window)
from validation import ConfigValidator

TWO_PI = 2.0 * math.pi


class Termination(str, Enum):
    CLEARED_FOOTPRINT = 'CLEARED_FOOTPRINT'
    WALL_CONTACT = 'WALL_CONTACT'
    MAX_DISTANCE = 'MAX_DISTANCE'
    INFEASIBLE_PLACEMENT = 'INFEASIBLE_PLACEMENT'


def normalize_direction(phi):
    """Map a push angle into [0, 2pi); in-range values are returned untouched."""
    phi = float(phi)
    if 0.0 <= phi < TWO_PI:
        return phi
    wrapped = phi % TWO_PI
    return 0.0 if wrapped >= TWO_PI else wrapped


def push_directions(g):
    """g evenly spaced push angles starting at 0."""
    if g < 1:
        raise ValueError(f"g must be at least 1, got {g}")
    return [TWO_PI * k / g for k in range(g)]


@dataclass(frozen=True)
class Pusher:
    """Rectangular pusher: thickness along the push direction, width across it."""

    shape: ConvexPolygon
    pose: Pose2

    @classmethod
    def shape_for(cls, thickness=PUSHER_THICKNESS, width=PUSHER_WIDTH):
        return ConvexPolygon.rectangle(thickness, width)

    @property
    def polygon(self):
        return transform(self.shape, self.pose)


@dataclass(frozen=True)
class PushAction:
    """Push object_id along phi for at most max_distance cm."""

    object_id: int
    phi: float
    max_distance: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, 'phi', normalize_direction(self.phi))
        if self.max_distance < 0:
            raise ValueError(f"max_distance must be non-negative, got {self.max_distance}")


@dataclass(frozen=True)
class PushOutcome:
    new_state: object
    realized_distance: float
    termination: Termination
    blocking_id: int = None
    moved_ids: frozenset = field(default_factory=frozenset)
    pusher_pose: Pose2 = None

    def __post_init__(self):
        object.__setattr__(self, 'moved_ids', frozenset(self.moved_ids))
        if self.termination == Termination.WALL_CONTACT and self.blocking_id is None:
            raise ValueError("WALL_CONTACT outcomes need a blocking_id")
        if self.blocking_id is not None and self.termination not in (Termination.WALL_CONTACT,
                                                                      Termination.INFEASIBLE_PLACEMENT):
            raise ValueError(f"{self.termination.value} outcomes carry no blocking_id")

    @property
    def is_stalled(self):
        """Pusher placement blocked by a movable object, which could be pushed aside first."""
        return self.termination == Termination.INFEASIBLE_PLACEMENT and self.blocking_id is not None


def _displaced_pose(obj, distance, dx, dy):
    return Pose2(obj.pose.x + distance * dx, obj.pose.y + distance * dy, obj.pose.theta)


def _first_true(predicate, guess, floor, limit=None):
    """
    First step >= floor at which predicate holds, searching around an
    analytic guess. Returns None when the predicate holds at neither the
    guess nor the step after it.
    """
    k = max(floor, guess)
    while k > floor and predicate(k - 1):
        k -= 1
    if predicate(k):
        return k
    if (limit is None or k + 1 <= limit) and predicate(k + 1):
        return k + 1
    return None


class _Member:
    """An object in the pushed set; joined at step join_step."""

    def __init__(self, obj, join_step, dx, dy, step):
        self.obj = obj
        self.join_step = join_step
        self.dx, self.dy, self.step = dx, dy, step

    def distance_at(self, m):
        return float(m - self.join_step + 1) * self.step

    def polygon_at(self, m):
        return transform(self.obj.shape, _displaced_pose(self.obj, self.distance_at(m), self.dx, self.dy))


class PushSimulator:
    """
    Quasi-static push engine with a fixed step and pusher size.
    """

    def __init__(self, push_step=PUSH_STEP, pusher_thickness=PUSHER_THICKNESS,
                 pusher_width=PUSHER_WIDTH, retreat_step=PUSHER_RETREAT_STEP, monitor=None):
        """
        Args:
            push_step: Distance per simulation step (cm)
            pusher_thickness: Pusher extent along the push direction (cm)
            pusher_width: Pusher extent across the push direction (cm)
            retreat_step: Step used when backing the pusher off the target (cm)
            monitor: Optional SearchMonitor counting simulated pushes
        """
        is_valid, message = ConfigValidator.validate_push_step(push_step)
        if not is_valid:
            raise ValueError(message)
        self.push_step = float(push_step)
        self.retreat_step = float(retreat_step)
        self.pusher_shape = Pusher.shape_for(pusher_thickness, pusher_width)
        self.monitor = monitor

    def pusher_placement(self, state, action):
        """
        Place the pusher behind the target for this push.

        The pusher starts centered on the target's centroid facing phi and
        backs off along phi - pi until it no longer intersects the target.

        Returns:
            Pose2 of the pusher, or None when the placed pusher hits another
            object or the walls

        Raises:
            UnknownObject
        """
        pose, _, _ = self.place_pusher(state, action)
        return pose

    def place_pusher(self, state, action):
        """
        Pusher placement with the reason it failed.

        Returns:
            (pose, blocker_id, attempted_pose): pose is None when placement
            fails; blocker_id is the lowest-id movable object the placed
            pusher hits when that is the only obstruction (walls and
            immovable objects give None); attempted_pose is where the pusher
            would have gone, None for an immovable target

        Raises:
            UnknownObject
        """
        target = state.object(action.object_id)
        if target.immovable:
            return None, None, None
        dx, dy = math.cos(action.phi), math.sin(action.phi)
        target_poly = target.polygon

        def pose_at(k):
            back = k * self.retreat_step
            return Pose2(target.pose.x - back * dx, target.pose.y - back * dy, action.phi)

        def overlapping(k):
            return intersects(transform(self.pusher_shape, pose_at(k)), target_poly)

        start = transform(self.pusher_shape, pose_at(0))
        window = translation_window(start, target_poly, (-dx, -dy))
        guess = 0 if window is None else max(0, int(math.ceil(window[1] / self.retreat_step)))
        k = guess
        while k > 0 and not overlapping(k - 1):
            k -= 1
        while overlapping(k):
            k += 1

        pose = pose_at(k)
        placed = transform(self.pusher_shape, pose)
        if not contains_in_room(placed, state.room):
            logging.debug(f"Pusher for object {action.object_id} at phi={action.phi:.3f} leaves the room")
            return None, None, pose
        hit = [other for other in state.objects if other.id != target.id and intersects(placed, other.polygon)]
        if not hit:
            return pose, None, pose
        logging.debug(f"Pusher for object {action.object_id} at phi={action.phi:.3f} "
                      f"hits objects {[other.id for other in hit]}")
        if any(other.immovable for other in hit):
            return None, None, pose
        return None, hit[0].id, pose

    def simulate_push(self, state, action, footprint=()):
        """
        Simulate one push.

        Args:
            state: WorldState before the push
            action: PushAction
            footprint: ConvexPolygons the target should leave; only a target
                that starts on the footprint can end with CLEARED_FOOTPRINT

        Returns:
            PushOutcome

        Raises:
            UnknownObject
        """
        outcome = self._advance(state, action, footprint)
        if self.monitor is not None:
            self.monitor.record_push(outcome.termination)
            if self.monitor.logger is not None:
                self.monitor.logger.log_push(action, outcome)
        return outcome

    def _advance(self, state, action, footprint):
        pusher_pose, blocker_id, attempted = self.place_pusher(state, action)
        if pusher_pose is None:
            return PushOutcome(state, 0.0, Termination.INFEASIBLE_PLACEMENT, blocker_id,
                               pusher_pose=attempted)

        step = self.push_step
        dx, dy = math.cos(action.phi), math.sin(action.phi)
        direction = (dx, dy)
        max_steps = math.inf if math.isinf(action.max_distance) else \
            int(math.floor(action.max_distance / step + 1e-9))

        target = state.object(action.object_id)
        members = {target.id: _Member(target, 1, dx, dy, step)}
        static = {obj.id: obj for obj in state.objects if obj.id != target.id}
        contact_events = {}  # (member id, static id) -> step
        wall_events = {}  # member id -> step

        def add_member_events(member):
            for other in static.values():
                event = self._contact_step(member, other, direction)
                if event is not None:
                    contact_events[(member.obj.id, other.id)] = event
            wall_events[member.obj.id] = self._wall_step(member, state.room)

        add_member_events(members[target.id])
        clear_step = self._clear_step(members[target.id], footprint, direction)

        current = 0
        while True:
            event_step = min(min(contact_events.values(), default=math.inf), min(wall_events.values()))
            if clear_step <= max_steps:
                stop_step, stop_reason = clear_step, Termination.CLEARED_FOOTPRINT
            else:
                stop_step, stop_reason = max_steps, Termination.MAX_DISTANCE
            if stop_step < event_step - 1:
                return self._finish(state, members, stop_step, stop_reason, None, pusher_pose, direction)

            # Contact propagation at event_step, then wall and immovable checks.
            blocked = set()
            while True:
                due = sorted(pair for pair, s in contact_events.items() if s == event_step)
                if not due:
                    break
                for member_id, other_id in due:
                    contact_events.pop((member_id, other_id), None)
                    if other_id not in static:
                        continue
                    other = static[other_id]
                    if other.immovable:
                        blocked.add(member_id)
                        continue
                    del static[other_id]
                    for pair in [p for p in contact_events if p[1] == other_id]:
                        del contact_events[pair]
                    joined = _Member(other, event_step, dx, dy, step)
                    members[other_id] = joined
                    add_member_events(joined)
            blocked.update(mid for mid, s in wall_events.items() if s == event_step)

            if blocked:
                blocking_id = min(blocked, key=lambda mid: (-members[mid].join_step, mid))
                return self._finish(state, members, event_step - 1, Termination.WALL_CONTACT,
                                    blocking_id, pusher_pose, direction)
            if stop_step == event_step - 1:
                return self._finish(state, members, stop_step, stop_reason, None, pusher_pose, direction)
            current = event_step
            logging.debug(f"Push of {action.object_id}: {len(members)} pushed objects at step {current}")

    def replay_push(self, state, object_id, phi, distance):
        """Re-run a recorded push of realized length distance with no footprint."""
        return self.simulate_push(state, PushAction(object_id, phi, distance), ())

    def _contact_step(self, member, other, direction):
        window = translation_window(member.obj.polygon, other.polygon, direction)
        if window is None:
            return None
        t_enter, t_exit = window
        k_guess = max(1, int(math.floor(t_enter / self.push_step)) + 1)
        if k_guess * self.push_step > t_exit + self.push_step:
            return None
        other_poly = other.polygon
        offset = member.join_step - 1

        def touching(k):
            return intersects(member.polygon_at(k + offset), other_poly)

        k = _first_true(touching, k_guess, 1)
        return None if k is None else k + offset

    def _wall_step(self, member, room):
        x0, y0, x1, y1 = member.obj.polygon.bounds
        exits = []
        if member.dx > 1e-15:
            exits.append((room.x_max - x1) / member.dx)
        elif member.dx < -1e-15:
            exits.append((room.x_min - x0) / member.dx)
        if member.dy > 1e-15:
            exits.append((room.y_max - y1) / member.dy)
        elif member.dy < -1e-15:
            exits.append((room.y_min - y0) / member.dy)
        offset = member.join_step - 1
        k_guess = max(1, int(math.ceil(min(exits) / self.push_step)))

        def outside(k):
            return not contains_in_room(member.polygon_at(k + offset), room)

        k = _first_true(outside, k_guess, 1)
        while k is None:
            k_guess += 1
            k = _first_true(outside, k_guess, 1)
        return k + offset

    def _clear_step(self, target, footprint, direction):
        """First step at which the target no longer touches the footprint, or inf."""
        footprint = list(footprint)
        start = target.obj.polygon
        if not any(intersects(start, member) for member in footprint):
            return math.inf
        windows = [w for w in (translation_window(start, member, direction) for member in footprint)
                   if w is not None]

        def on_footprint(n):
            poly = target.polygon_at(n)
            return any(intersects(poly, member) for member in footprint)

        n = 1
        while True:
            s = n * self.push_step
            covering = [t_exit for t_enter, t_exit in windows if t_enter < s < t_exit]
            if covering:
                n = max(n + 1, int(math.ceil(max(covering) / self.push_step)))
                continue
            k = n
            while k > 1 and not on_footprint(k - 1):
                k -= 1
            while on_footprint(k):
                k += 1
            return k

    def _finish(self, state, members, n, termination, blocking_id, pusher_pose, direction):
        poses = {}
        for member_id, member in members.items():
            if n >= member.join_step:
                poses[member_id] = _displaced_pose(member.obj, member.distance_at(n), *direction)
        new_state = state.with_poses(poses) if poses else state
        realized = float(n) * self.push_step
        final_pusher = Pose2(pusher_pose.x + realized * direction[0],
                             pusher_pose.y + realized * direction[1], pusher_pose.theta)
        return PushOutcome(new_state, realized, termination, blocking_id, frozenset(poses), final_pusher)


def pusher_placement(state, action, simulator=None):
    return (simulator or PushSimulator()).pusher_placement(state, action)


def simulate_push(state, action, footprint=(), simulator=None):
    return (simulator or PushSimulator()).simulate_push(state, action, footprint)


def replay_push(state, object_id, phi, distance, simulator=None):
    return (simulator or PushSimulator()).replay_push(state, object_id, phi, distance)


def push_corridor(state, object_id, phi):
    """
    Region the object sweeps when pushed along phi across the whole room:
    the hull of its polygon at its pose and translated by the room diagonal.
    """
    points = state.object(object_id).polygon.points
    reach = state.room.diagonal
    shift = np.array([math.cos(phi), math.sin(phi)]) * reach
    return ConvexPolygon.from_points(np.vstack((points, points + shift)))
