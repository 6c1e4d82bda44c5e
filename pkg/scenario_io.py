"""
JSON persistence for scenarios, plans and config files.

All documents are UTF-8 JSON objects carrying `version: 1`. Floats are
written with full precision so a load after save reproduces every value
exactly.
"""
import json
import os
import logging
from dataclasses import dataclass, field

from errors import ParseError, ScenarioIOError, SchemaVersionMismatch
from geometry import ConvexPolygon, Pose2
from path_planners import FootprintKind, PathFootprint
from push_physics import Termination
from world import MovableObject, Room, Scenario, WorldState

SCHEMA_VERSION = 1


def read_document(path):
    """
    Read a JSON document.

    Raises:
        ScenarioIOError: file cannot be read
        ParseError: content is not valid JSON
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ScenarioIOError(f"cannot read {path}: {e}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", line=e.lineno)
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not UTF-8 ({e.reason})")


def write_document(path, document):
    """Write a JSON document, creating parent directories."""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2)
            f.write('\n')
    except OSError as e:
        raise ScenarioIOError(f"cannot write {path}: {e}")
    logging.debug(f"Wrote {path}")


def _check_version(document, source):
    if not isinstance(document, dict):
        raise ParseError(f"{source}: top level must be an object")
    if 'version' not in document:
        raise ParseError(f"{source}: missing version", field='version')
    if document['version'] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{source}: version {document['version']!r}, expected {SCHEMA_VERSION}")


def _get(mapping, key, kind, source, where):
    name = f"{where}.{key}" if where else key
    if not isinstance(mapping, dict) or key not in mapping:
        raise ParseError(f"{source}: missing field", field=name)
    value = mapping[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{source}: expected number", field=name)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"{source}: expected integer", field=name)
        return value
    if not isinstance(value, kind):
        raise ParseError(f"{source}: expected {kind.__name__}", field=name)
    return value


def _points_doc(poly):
    return [[x, y] for x, y in poly.vertices]


def _parse_polygon(value, source, where):
    if not isinstance(value, list) or not all(isinstance(p, list) and len(p) == 2 for p in value):
        raise ParseError(f"{source}: expected a list of [x, y] points", field=where)
    try:
        return ConvexPolygon(tuple((float(x), float(y)) for x, y in value))
    except (TypeError, ValueError) as e:
        raise ParseError(f"{source}: invalid polygon: {e}", field=where)


def _pose_doc(pose):
    return {'x': pose.x, 'y': pose.y, 'theta': pose.theta}


def _parse_pose(value, source, where):
    return Pose2(_get(value, 'x', float, source, where), _get(value, 'y', float, source, where),
                 _get(value, 'theta', float, source, where))


def scenario_to_document(scenario):
    room = scenario.state.room
    objects = []
    for obj in scenario.state.objects:
        entry = {'id': obj.id, 'shape': _points_doc(obj.shape), 'pose': _pose_doc(obj.pose)}
        if obj.immovable:
            entry['immovable'] = True
        objects.append(entry)
    return {
        'version': SCHEMA_VERSION,
        'seed': scenario.seed,
        'room': {'x_min': room.x_min, 'y_min': room.y_min, 'x_max': room.x_max, 'y_max': room.y_max},
        'agent_shape': _points_doc(scenario.agent_shape),
        'path_shape': _points_doc(scenario.straight_path_shape),
        'objects': objects,
    }


def scenario_from_document(document, source='<scenario>'):
    """
    Build a Scenario from a parsed document.

    Raises:
        ParseError, SchemaVersionMismatch
    """
    _check_version(document, source)
    seed = _get(document, 'seed', int, source, '')
    room_doc = _get(document, 'room', dict, source, '')
    try:
        room = Room(*(_get(room_doc, key, float, source, 'room') for key in ('x_min', 'y_min', 'x_max', 'y_max')))
    except ValueError as e:
        raise ParseError(f"{source}: {e}", field='room')
    agent = _parse_polygon(_get(document, 'agent_shape', list, source, ''), source, 'agent_shape')
    path = _parse_polygon(_get(document, 'path_shape', list, source, ''), source, 'path_shape')

    objects = []
    for index, entry in enumerate(_get(document, 'objects', list, source, '')):
        where = f"objects[{index}]"
        object_id = _get(entry, 'id', int, source, where)
        if object_id != index:
            raise ParseError(f"{source}: ids must be contiguous from 0 in order", field=f"{where}.id")
        shape = _parse_polygon(_get(entry, 'shape', list, source, where), source, f"{where}.shape")
        pose = _parse_pose(_get(entry, 'pose', dict, source, where), source, f"{where}.pose")
        immovable = entry.get('immovable', False)
        if not isinstance(immovable, bool):
            raise ParseError(f"{source}: expected boolean", field=f"{where}.immovable")
        try:
            objects.append(MovableObject(object_id, shape, pose, immovable))
        except ValueError as e:
            raise ParseError(f"{source}: {e}", field=where)
    return Scenario(seed, WorldState(room, tuple(objects)), agent, path)


def save_scenario(path, scenario):
    write_document(path, scenario_to_document(scenario))
    logging.info(f"Saved scenario seed={scenario.seed} to {path}")


def load_scenario(path):
    """
    Raises:
        ScenarioIOError, ParseError, SchemaVersionMismatch
    """
    return scenario_from_document(read_document(path), source=str(path))


@dataclass(frozen=True)
class StoredPush:
    object_id: int
    phi: float
    distance: float
    termination: Termination
    blocking_id: int = None
    moved_ids: tuple = ()


@dataclass(frozen=True)
class StoredPlan:
    """A plan artifact as written to disk."""

    planner: str
    levels_used: int
    footprint: PathFootprint
    pushes: tuple
    waypoints: tuple = ()
    final_poses: dict = field(default_factory=dict)


def plan_to_document(plan):
    footprint = plan.footprint
    return {
        'version': SCHEMA_VERSION,
        'planner': plan.planner,
        'levels_used': plan.levels_used,
        'footprint': {
            'kind': footprint.kind.value,
            'polygons': [_points_doc(p) for p in footprint.polygons],
            'start': _pose_doc(footprint.start),
            'goal': _pose_doc(footprint.goal),
            'shrink_iterations': footprint.shrink_iterations,
            'overlap': footprint.overlap,
        },
        'pushes': [{
            'object_id': action.object_id,
            'phi': action.phi,
            'distance': outcome.realized_distance,
            'termination': outcome.termination.value,
            'blocking_id': outcome.blocking_id,
            'moved_ids': sorted(outcome.moved_ids),
        } for action, outcome in plan.pushes],
        'waypoints': [_pose_doc(p) for p in footprint.waypoints],
        'final_objects': [{'id': obj.id, 'pose': _pose_doc(obj.pose)} for obj in plan.final_state.objects],
    }


def plan_from_document(document, source='<plan>'):
    """
    Raises:
        ParseError, SchemaVersionMismatch
    """
    _check_version(document, source)
    planner = document.get('planner')
    if planner is not None and not isinstance(planner, str):
        raise ParseError(f"{source}: expected string", field='planner')
    levels = _get(document, 'levels_used', int, source, '')

    fp_doc = _get(document, 'footprint', dict, source, '')
    try:
        kind = FootprintKind(_get(fp_doc, 'kind', str, source, 'footprint'))
    except ValueError:
        raise ParseError(f"{source}: unknown footprint kind", field='footprint.kind')
    polygons = tuple(_parse_polygon(p, source, f"footprint.polygons[{i}]")
                     for i, p in enumerate(_get(fp_doc, 'polygons', list, source, 'footprint')))
    overlap = fp_doc.get('overlap')
    if overlap is not None and (isinstance(overlap, bool) or not isinstance(overlap, (int, float))):
        raise ParseError(f"{source}: expected number or null", field='footprint.overlap')
    waypoints = tuple(_parse_pose(p, source, f"waypoints[{i}]")
                      for i, p in enumerate(document.get('waypoints', [])))
    try:
        footprint = PathFootprint(kind, polygons,
                                  _parse_pose(_get(fp_doc, 'start', dict, source, 'footprint'), source, 'footprint.start'),
                                  _parse_pose(_get(fp_doc, 'goal', dict, source, 'footprint'), source, 'footprint.goal'),
                                  _get(fp_doc, 'shrink_iterations', int, source, 'footprint'),
                                  overlap, waypoints)
    except ValueError as e:
        raise ParseError(f"{source}: {e}", field='footprint')

    pushes = []
    for index, entry in enumerate(_get(document, 'pushes', list, source, '')):
        where = f"pushes[{index}]"
        try:
            termination = Termination(_get(entry, 'termination', str, source, where))
        except ValueError:
            raise ParseError(f"{source}: unknown termination", field=f"{where}.termination")
        blocking = entry.get('blocking_id')
        if blocking is not None and (isinstance(blocking, bool) or not isinstance(blocking, int)):
            raise ParseError(f"{source}: expected integer or null", field=f"{where}.blocking_id")
        moved = entry.get('moved_ids', [])
        if not isinstance(moved, list) or not all(isinstance(m, int) and not isinstance(m, bool) for m in moved):
            raise ParseError(f"{source}: expected a list of ids", field=f"{where}.moved_ids")
        pushes.append(StoredPush(_get(entry, 'object_id', int, source, where),
                                 _get(entry, 'phi', float, source, where),
                                 _get(entry, 'distance', float, source, where),
                                 termination, blocking, tuple(moved)))

    final_poses = {}
    for index, entry in enumerate(_get(document, 'final_objects', list, source, '')):
        where = f"final_objects[{index}]"
        final_poses[_get(entry, 'id', int, source, where)] = \
            _parse_pose(_get(entry, 'pose', dict, source, where), source, f"{where}.pose")
    return StoredPlan(planner, levels, footprint, tuple(pushes), waypoints, final_poses)


def save_plan(path, plan):
    write_document(path, plan_to_document(plan))
    logging.info(f"Saved {plan.planner or 'plan'} with {len(plan.pushes)} pushes to {path}")


def load_plan(path):
    return plan_from_document(read_document(path), source=str(path))
