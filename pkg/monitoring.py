"""
Structured logging and search instrumentation for the planners.
Provides context-tagged log lines and node/push counters with the
branching-factor bound check.
"""
import time
import logging
from collections import defaultdict

from config import LOG_LEVEL


class StructuredLogger:
    """
    Logger that tags each line with planner context such as the trial
    seed and clutter level.
    """

    def __init__(self, name='namo', log_level=LOG_LEVEL):
        """
        Args:
            name: Logger name, e.g. namo.bench or namo.cli
            log_level: Level name or number for the logger and its handler
        """
        self.logger = logging.getLogger(name)
        self.logger.setLevel(log_level)

        if not self.logger.handlers:
            handler = logging.StreamHandler()
            handler.setLevel(log_level)
            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            )
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

        self.context = {}

    def set_context(self, **kwargs):
        """Context pairs appended to every following line until cleared."""
        self.context.update(kwargs)

    def clear_context(self):
        self.context = {}

    def _format_message(self, message, **kwargs):
        all_context = {**self.context, **kwargs}
        if all_context:
            context_str = ' '.join([f"{k}={v}" for k, v in all_context.items()])
            return f"{message} | {context_str}"
        return message

    def debug(self, message, **kwargs):
        self.logger.debug(self._format_message(message, **kwargs))

    def info(self, message, **kwargs):
        self.logger.info(self._format_message(message, **kwargs))

    def warning(self, message, **kwargs):
        self.logger.warning(self._format_message(message, **kwargs))

    def error(self, message, **kwargs):
        self.logger.error(self._format_message(message, **kwargs))

    def log_push(self, action, outcome):
        """Log one simulated push at debug level."""
        self.debug(
            f"Push: {outcome.termination.value}",
            object_id=action.object_id,
            phi=f"{action.phi:.4f}",
            distance=f"{outcome.realized_distance:.3f}",
            blocking_id=outcome.blocking_id,
            moved=sorted(outcome.moved_ids)
        )

    def log_subgoal(self, target_id, level, solved, pushes=0):
        """Log the result of one sub-goal search."""
        level_fn = self.info if solved else self.debug
        level_fn(
            f"Sub-goal {target_id}: {'SOLVED' if solved else 'FAILED'}",
            level=level,
            pushes=pushes
        )

    def log_path(self, kind, shrink_iterations=0, overlap=None):
        """Log a candidate path footprint."""
        self.info(
            f"Path: {kind}",
            shrink_iterations=shrink_iterations,
            overlap=f"{overlap:.3f}" if overlap is not None else 'n/a'
        )

    def log_trial(self, record):
        """Log one benchmark trial record."""
        level_fn = self.info if record.success else self.warning
        level_fn(
            f"Trial {record.planner}: {'SUCCESS' if record.success else 'FAILURE'}",
            clutter=f"{record.clutter_actual:.1f}%",
            seed=record.seed,
            pushes=record.pushes,
            levels=record.levels_used,
            shrink=record.shrink_iterations,
            wall_time=f"{record.wall_time:.2f}s"
        )

    def log_validation_error(self, validation_type, error_message, **details):
        """Log validation error."""
        self.warning(
            f"Validation Failed: {validation_type}",
            error=error_message,
            **details
        )


class SearchMonitor:
    """
    Counts search effort for one planning run.

    Nodes are counted per (sub-goal, depth) and checked against the
    (n*g)^depth branching bound, n being the overlapping-object count when
    the sub-goal search started.
    """

    def __init__(self, logger=None):
        self.logger = logger
        self.pushes_simulated = 0
        self.terminations = defaultdict(int)
        self.subgoals = []  # [{'target_id', 'n', 'g', 'depth_limit'}]
        self.node_counts = defaultdict(int)  # (subgoal index, depth) -> nodes
        self.violations = []
        self.started = time.monotonic()

    def record_push(self, termination):
        self.pushes_simulated += 1
        self.terminations[termination.value] += 1

    def begin_subgoal(self, target_id, n_overlapping, g, depth_limit):
        """Register a sub-goal search and return its key."""
        self.subgoals.append({
            'target_id': target_id,
            'n': max(1, n_overlapping),
            'g': g,
            'depth_limit': depth_limit,
        })
        return len(self.subgoals) - 1

    def bound(self, key, depth):
        info = self.subgoals[key]
        return (info['n'] * info['g']) ** depth

    def record_node(self, key, depth):
        """Count one expanded node; returns False once the bound is exceeded."""
        self.node_counts[(key, depth)] += 1
        count = self.node_counts[(key, depth)]
        limit = self.bound(key, depth)
        if count == limit + 1:
            violation = {'subgoal': key, 'target_id': self.subgoals[key]['target_id'],
                         'depth': depth, 'count': count, 'bound': limit}
            self.violations.append(violation)
            if self.logger:
                self.logger.error("Node bound exceeded", **violation)
            else:
                logging.error(f"Node bound exceeded: {violation}")
        return count <= limit

    def nodes_expanded(self):
        return sum(self.node_counts.values())

    def summary(self):
        """Get search effort summary."""
        per_level = defaultdict(int)
        for (_, depth), count in self.node_counts.items():
            per_level[depth] += count
        return {
            'pushes_simulated': self.pushes_simulated,
            'terminations': dict(self.terminations),
            'subgoals': len(self.subgoals),
            'nodes_expanded': self.nodes_expanded(),
            'nodes_per_level': dict(sorted(per_level.items())),
            'bound_violations': list(self.violations),
            'elapsed_seconds': time.monotonic() - self.started,
        }

    def reset(self):
        self.pushes_simulated = 0
        self.terminations.clear()
        self.subgoals.clear()
        self.node_counts.clear()
        self.violations.clear()
        self.started = time.monotonic()
