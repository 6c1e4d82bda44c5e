"""
Validity checks for planner inputs and terminal world states.
Parameter checks return (is_valid, message) tuples; the terminal check
returns a ValidityReport listing every violation.
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np

from geometry import intersects, contains_in_room


@dataclass(frozen=True)
class ValidityReport:
    """Violations found in a world state against a footprint."""

    intersecting_pairs: tuple = ()
    out_of_room: tuple = ()
    footprint_overlaps: tuple = ()
    notes: tuple = field(default=(), compare=False)

    @property
    def is_valid(self):
        return not (self.intersecting_pairs or self.out_of_room or self.footprint_overlaps)

    def describe(self):
        if self.is_valid:
            return "valid"
        parts = []
        if self.intersecting_pairs:
            parts.append(f"intersecting pairs {list(self.intersecting_pairs)}")
        if self.out_of_room:
            parts.append(f"outside room {list(self.out_of_room)}")
        if self.footprint_overlaps:
            parts.append(f"on footprint {list(self.footprint_overlaps)}")
        return "; ".join(parts)


def validate_terminal(state, footprint):
    """
    Check a state against the goal conditions: no object pair intersects,
    every object lies strictly inside the room, and no object overlaps any
    footprint polygon.

    Args:
        state: WorldState
        footprint: list of ConvexPolygon (may be empty)

    Returns:
        ValidityReport
    """
    polys = state.polygons()
    pairs = tuple((i, j) for i in range(len(polys)) for j in range(i + 1, len(polys))
                  if intersects(polys[i], polys[j]))
    outside = tuple(i for i, poly in enumerate(polys) if not contains_in_room(poly, state.room))
    on_path = tuple(i for i, poly in enumerate(polys)
                    if any(intersects(poly, member) for member in footprint))
    report = ValidityReport(pairs, outside, on_path)
    if not report.is_valid:
        logging.debug(f"Terminal state invalid: {report.describe()}")
    return report


def _is_number(value):
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


def _is_integer(value):
    return _is_number(value) and float(value).is_integer()


class ConfigValidator:
    """Validates planner parameter bundles before a search starts."""

    @staticmethod
    def validate_room(room):
        """
        Validate room bounds.

        Returns:
            tuple: (is_valid, error_message)
        """
        values = (room.x_min, room.y_min, room.x_max, room.y_max)
        if not all(_is_number(v) and math.isfinite(v) for v in values):
            return False, f"Room bounds must be finite numbers: {values}"
        if room.x_min >= room.x_max or room.y_min >= room.y_max:
            return False, f"Room bounds are degenerate: {values}"
        return True, "Valid room"

    @staticmethod
    def validate_planner_config(config):
        """
        Validate push planner parameters.

        Args:
            config: object with g, L_max, candidates_per_level, k_pushes_per_object

        Returns:
            tuple: (is_valid, error_message)
        """
        for name in ('g', 'L_max', 'candidates_per_level'):
            value = getattr(config, name)
            if not _is_integer(value):
                return False, f"{name} must be an integer, got {value!r}"
            if value < 1:
                return False, f"{name} must be at least 1, got {value}"
        k = config.k_pushes_per_object
        if k is not None and (not _is_integer(k) or k < 1):
            return False, f"k_pushes_per_object must be a positive integer or None, got {k!r}"
        return True, "Valid planner config"

    @staticmethod
    def validate_rrt_params(params):
        """
        Validate RRT-Connect parameters.

        Returns:
            tuple: (is_valid, error_message)
        """
        if not _is_integer(params.max_nodes) or params.max_nodes < 2:
            return False, f"max_nodes must be an integer >= 2, got {params.max_nodes!r}"
        if not _is_number(params.step_size) or not params.step_size > 0:
            return False, f"step_size must be positive, got {params.step_size!r}"
        if not _is_number(params.goal_bias) or not 0.0 <= params.goal_bias <= 1.0:
            return False, f"goal_bias must lie in [0, 1], got {params.goal_bias!r}"
        if not _is_number(params.angle_weight) or params.angle_weight < 0:
            return False, f"angle_weight must be non-negative, got {params.angle_weight!r}"
        if not _is_integer(params.shortcut_attempts) or params.shortcut_attempts < 0:
            return False, f"shortcut_attempts must be a non-negative integer, got {params.shortcut_attempts!r}"
        return True, "Valid RRT params"

    @staticmethod
    def validate_push_step(step):
        if not _is_number(step) or not step > 0 or not math.isfinite(step):
            return False, f"push step must be a positive finite length, got {step!r}"
        return True, "Valid push step"
