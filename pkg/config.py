import os
from dataclasses import dataclass, fields, replace
from dotenv import load_dotenv

load_dotenv()


def _env_float(name, default):
    return float(os.getenv(name, default))


def _env_int(name, default):
    return int(os.getenv(name, default))


# Room and clutter generator
ROOM_WIDTH = _env_float('NAMO_ROOM_WIDTH', 38.0)  # cm, x extent
ROOM_HEIGHT = _env_float('NAMO_ROOM_HEIGHT', 19.0)  # cm, y extent
NUM_SQUARES = _env_int('NAMO_NUM_SQUARES', 20)
LATTICE_COLUMNS = 5
LATTICE_ROWS = 4
LATTICE_JITTER = 0.25  # Max jitter as a fraction of the lattice cell
PLACEMENT_ATTEMPTS = 100  # Re-jitter attempts per square

# Agent and path shapes
AGENT_LENGTH = 4.5  # cm, along local y
AGENT_WIDTH = 2.25  # cm, along local x
PATH_LENGTH = 17.5  # cm
PATH_WIDTH = 1.5  # cm

# Push physics
PUSHER_THICKNESS = _env_float('NAMO_PUSHER_THICKNESS', 1.0)  # cm, along the push direction
PUSHER_WIDTH = _env_float('NAMO_PUSHER_WIDTH', 4.0)  # cm, across the push direction
PUSH_STEP = _env_float('NAMO_PUSH_STEP', 0.05)  # cm per simulation step
PUSHER_RETREAT_STEP = 0.05  # cm per retreat step when placing the pusher
GEOMETRY_TOLERANCE = 1e-9  # cm; contact within this distance is not an intersection

# Placement heuristic
GRID_RESOLUTION = _env_float('NAMO_GRID_RESOLUTION', 0.25)  # cm per occupancy cell
GRID_SUBSAMPLES = 4  # Samples per cell edge for coverage estimates

# Push planner
PUSH_DIRECTIONS = _env_int('NAMO_PUSH_DIRECTIONS', 24)  # pi/12 angle resolution
MAX_TREE_LEVEL = _env_int('NAMO_MAX_TREE_LEVEL', 3)
CANDIDATES_PER_LEVEL = _env_int('NAMO_CANDIDATES_PER_LEVEL', 20)
RETRY_ALL_DIRECTIONS = False  # Re-attempt blocked targets in every direction, not just the blocked one

# Path sampling
ENDPOINT_BAND = 2.0  # cm band at each end of the x-axis for start/goal
ENDPOINT_ATTEMPTS = 1000

# RRT-Connect
RRT_MAX_NODES = _env_int('NAMO_RRT_MAX_NODES', 50000)
RRT_STEP_SIZE = _env_float('NAMO_RRT_STEP_SIZE', 0.5)  # cm
RRT_GOAL_BIAS = 0.05
RRT_ANGLE_WEIGHT = 1.0  # cm per radian in the SE(2) metric
RRT_SEED = _env_int('NAMO_RRT_SEED', 0)
SHORTCUT_ATTEMPTS = 100  # Greedy smoothing attempts on raw RRT paths
SHRINK_FACTOR = 0.9  # Area factor per shrink iteration
MIN_AREA_FRACTION = 0.01  # Below this the body counts as a point robot

# Benchmark sweep
CLUTTER_LEVELS = (18, 37, 43, 49, 56)  # percent
TRIALS_PER_LEVEL = 10
TRIAL_TIME_BUDGET = _env_float('NAMO_TRIAL_TIME_BUDGET', 120.0)  # seconds per planner per trial
SWEEP_WORKERS = _env_int('NAMO_SWEEP_WORKERS', 1)
SVG_SCALE = 10.0  # px per cm

# Logging
LOG_LEVEL = os.getenv('NAMO_LOG_LEVEL', 'INFO')  # DEBUG, INFO, WARNING, ERROR, CRITICAL

SETTINGS_VERSION = 1


@dataclass(frozen=True)
class Settings:
    """Tunables shared by the planners, overridable from a config file."""

    push_directions: int = PUSH_DIRECTIONS
    max_tree_level: int = MAX_TREE_LEVEL
    candidates_per_level: int = CANDIDATES_PER_LEVEL
    k_pushes_per_object: int = None  # None: initial overlapping-object count
    retry_all_directions: bool = RETRY_ALL_DIRECTIONS
    rrt_max_nodes: int = RRT_MAX_NODES
    rrt_step_size: float = RRT_STEP_SIZE
    rrt_goal_bias: float = RRT_GOAL_BIAS
    rrt_seed: int = RRT_SEED
    rrt_angle_weight: float = RRT_ANGLE_WEIGHT
    shortcut_attempts: int = SHORTCUT_ATTEMPTS
    push_step: float = PUSH_STEP
    grid_resolution: float = GRID_RESOLUTION
    trial_time_budget: float = TRIAL_TIME_BUDGET
    workers: int = SWEEP_WORKERS


# config file section -> {file key: Settings attribute}
_SECTIONS = {
    'planner': {
        'g': 'push_directions',
        'L_max': 'max_tree_level',
        'candidates_per_level': 'candidates_per_level',
        'k_pushes_per_object': 'k_pushes_per_object',
        'retry_all_directions': 'retry_all_directions',
    },
    'rrt': {
        'max_nodes': 'rrt_max_nodes',
        'step_size': 'rrt_step_size',
        'goal_bias': 'rrt_goal_bias',
        'rng_seed': 'rrt_seed',
        'angle_weight': 'rrt_angle_weight',
        'shortcut_attempts': 'shortcut_attempts',
    },
    'physics': {'push_step': 'push_step'},
    'grid': {'resolution': 'grid_resolution'},
    'sweep': {'time_budget': 'trial_time_budget', 'workers': 'workers'},
}


def settings_from_document(document, source='<config>'):
    """
    Apply a parsed config document on top of the defaults.

    Args:
        document: dict parsed from a config file
        source: Name used in error messages

    Returns:
        Settings with overrides applied
    """
    from errors import ParseError, SchemaVersionMismatch

    if not isinstance(document, dict):
        raise ParseError(f"{source}: top level must be an object")
    version = document.get('version')
    if version != SETTINGS_VERSION:
        raise SchemaVersionMismatch(f"{source}: version {version!r}, expected {SETTINGS_VERSION}")

    types = {f.name: f.type for f in fields(Settings)}
    overrides = {}
    for section, values in document.items():
        if section == 'version':
            continue
        if section not in _SECTIONS:
            raise ParseError(f"{source}: unknown section", field=section)
        if not isinstance(values, dict):
            raise ParseError(f"{source}: section must be an object", field=section)
        for key, value in values.items():
            attribute = _SECTIONS[section].get(key)
            if attribute is None:
                raise ParseError(f"{source}: unknown key", field=f"{section}.{key}")
            expected = types[attribute]
            if expected in ('bool', bool):
                if not isinstance(value, bool):
                    raise ParseError(f"{source}: expected boolean", field=f"{section}.{key}")
            elif value is None and attribute == 'k_pushes_per_object':
                pass
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParseError(f"{source}: expected number", field=f"{section}.{key}")
            elif expected in ('int', int) and not float(value).is_integer():
                raise ParseError(f"{source}: expected integer", field=f"{section}.{key}")
            elif expected in ('int', int):
                value = int(value)
            else:
                value = float(value)
            overrides[attribute] = value
    return replace(Settings(), **overrides)


def load_settings(path=None):
    """
    Load Settings from a config file; defaults when path is None.

    Raises:
        ScenarioIOError, ParseError, SchemaVersionMismatch
    """
    if path is None:
        return Settings()
    from scenario_io import read_document
    return settings_from_document(read_document(path), source=str(path))
