"""
Error types and search deadlines for the NAMO planners.

Every failure the library raises derives from NamoError and carries the
error code used in logs, plan artifacts and CLI messages.
"""
import time
import logging


class NamoError(Exception):
    """Base class for all planner errors."""

    code = 'NAMO_ERROR'

    def __init__(self, message=''):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return f"{self.code}: {self.message}" if self.message else self.code


class ResolutionTooCoarse(NamoError):
    code = 'RESOLUTION_TOO_COARSE'


class OutOfBounds(NamoError):
    code = 'OUT_OF_BOUNDS'


class EmptyPath(NamoError):
    code = 'EMPTY_PATH'


class OverlappingInput(NamoError):
    code = 'OVERLAPPING_INPUT'


class PlacementFailed(NamoError):
    code = 'PLACEMENT_FAILED'


class UnknownObject(NamoError):
    code = 'UNKNOWN_OBJECT'


class SamplingExhausted(NamoError):
    code = 'SAMPLING_EXHAUSTED'


class InvalidEndpoints(NamoError):
    code = 'INVALID_ENDPOINTS'


class ScenarioIOError(NamoError):
    code = 'IO_ERROR'


class ParseError(NamoError):
    """Malformed scenario, plan or config file."""

    code = 'PARSE_ERROR'

    def __init__(self, message='', line=None, field=None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class SchemaVersionMismatch(NamoError):
    code = 'SCHEMA_VERSION_MISMATCH'


class ReplayMismatch(NamoError):
    code = 'REPLAY_MISMATCH'


class PlanningTimeout(NamoError):
    code = 'PLANNING_TIMEOUT'


class Deadline:
    """Wall-clock budget shared by the steps of one planning attempt."""

    def __init__(self, budget_seconds=None, clock=time.monotonic):
        """
        Args:
            budget_seconds: Seconds allowed from construction, None for no limit
            clock: Monotonic time source (injectable for tests)
        """
        self.budget_seconds = budget_seconds
        self.clock = clock
        self.started = clock()

    @classmethod
    def unbounded(cls):
        return cls(None)

    def elapsed(self):
        return self.clock() - self.started

    def remaining(self):
        if self.budget_seconds is None:
            return float('inf')
        return max(0.0, self.budget_seconds - self.elapsed())

    def expired(self):
        return self.budget_seconds is not None and self.elapsed() > self.budget_seconds

    def check(self, where=''):
        """Raise PlanningTimeout once the budget is spent."""
        if self.expired():
            logging.warning(f"Planning budget of {self.budget_seconds:.1f}s exhausted {where}".rstrip())
            raise PlanningTimeout(f"budget {self.budget_seconds:.1f}s exceeded {where}".rstrip())
