"""
Clutter-sweep benchmark: generate seeded scenarios per clutter level, run
each planner from shared endpoints under a wall-clock budget, record trial
statistics and write plan, scenario and SVG artifacts for every success.
"""
import os
import time
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from config import CLUTTER_LEVELS, TRIALS_PER_LEVEL, Settings
from errors import Deadline, PlacementFailed, PlanningTimeout, ReplayMismatch, SamplingExhausted
from monitoring import SearchMonitor, StructuredLogger
from path_planners import path_width_of, sample_endpoints
from push_physics import PushSimulator
from push_planner import PlannerKind, plan_with
from scenario_io import load_plan, load_scenario, save_plan, save_scenario
from svg_render import emit_svg
from sweep_report import plot_success, write_results
from validation import validate_terminal
from world import generate_scenario, square_side_for_clutter


@dataclass(frozen=True)
class TrialRecord:
    clutter_target: float
    clutter_actual: float
    seed: int
    planner: str
    success: bool
    pushes: int = 0
    levels_used: int = 0
    shrink_iterations: int = 0
    wall_time: float = 0.0

    def as_row(self):
        return [self.clutter_target, self.clutter_actual, self.seed, self.planner, self.success,
                self.pushes, self.levels_used, self.shrink_iterations, self.wall_time]


@dataclass(frozen=True)
class TrialResult:
    records: tuple
    monitors: dict  # planner -> SearchMonitor summary


@dataclass(frozen=True)
class ReplayResult:
    report: object  # ValidityReport
    exact_match: bool

    @property
    def is_valid(self):
        return self.report.is_valid and self.exact_match


def trial_seed(clutter_level, trial):
    """Seed of trial number `trial` at a clutter level; stable across runs."""
    return int(round(clutter_level * 100)) * 1000 + trial


def shared_endpoints(scenario, seed):
    """
    Start/goal pair drawn once per trial and reused by every planner.

    Poses clear of every object are preferred; when the clutter leaves none
    in the endpoint bands the pair only has to fit the room, and the push
    planners clear whatever it overlaps.

    Raises:
        SamplingExhausted: the shape does not fit the room's endpoint bands
    """
    rng = np.random.default_rng(seed)
    path_width = path_width_of(scenario.straight_path_shape)
    try:
        return sample_endpoints(scenario.state.room, scenario.agent_shape, rng, state=scenario.state,
                                path_width=path_width)
    except SamplingExhausted as e:
        logging.warning(f"Scenario {scenario.seed}: {e} clear of objects, allowing endpoints on objects")
    return sample_endpoints(scenario.state.room, scenario.agent_shape, rng, path_width=path_width)


def _artifact_stem(clutter_level, seed, planner=None):
    stem = f"clutter{clutter_level:g}_seed{seed}"
    return f"{stem}_{planner.lower()}" if planner else stem


def run_trial(clutter_level, trial, planners, settings=None, out_dir=None, logger=None):
    """
    Run every requested planner on one seeded scenario.

    Returns:
        TrialResult with one TrialRecord per planner, in the given order
    """
    settings = settings or Settings()
    logger = logger or StructuredLogger('namo.bench')
    planners = [PlannerKind(p) for p in planners]
    seed = trial_seed(clutter_level, trial)
    logger.set_context(clutter=clutter_level, seed=seed)

    try:
        scenario = generate_scenario(seed, square_side_for_clutter(clutter_level))
        endpoints = shared_endpoints(scenario, seed)
    except (PlacementFailed, SamplingExhausted) as e:
        logger.warning(f"Trial setup failed: {e}")
        logger.clear_context()
        records = tuple(TrialRecord(clutter_level, float('nan'), seed, p.value, False) for p in planners)
        return TrialResult(records, {})

    if out_dir:
        save_scenario(os.path.join(out_dir, 'scenarios', _artifact_stem(clutter_level, seed) + '.json'), scenario)

    records, monitors = [], {}
    for kind in planners:
        monitor = SearchMonitor(logger)
        simulator = PushSimulator(push_step=settings.push_step, monitor=monitor)
        deadline = Deadline(settings.trial_time_budget)
        started = time.monotonic()
        try:
            plan = plan_with(kind, scenario, endpoints, settings, simulator, monitor, deadline, logger)
        except PlanningTimeout:
            plan = None
        wall_time = time.monotonic() - started

        if plan is not None and out_dir:
            stem = _artifact_stem(clutter_level, seed, kind.value)
            plan_path = os.path.join(out_dir, 'plans', stem + '.json')
            save_plan(plan_path, plan)
            os.makedirs(os.path.join(out_dir, 'svg'), exist_ok=True)
            emit_svg(scenario, os.path.join(out_dir, 'svg', stem + '.svg'), plan=plan)
            try:
                result = replay(plan_path, scenario=scenario, simulator=PushSimulator(push_step=settings.push_step))
                if not result.is_valid:
                    logger.error("Plan artifact failed replay", planner=kind.value,
                                 report=result.report.describe())
            except ReplayMismatch as e:
                logger.error("Plan artifact failed replay", planner=kind.value, error=str(e))

        record = TrialRecord(
            clutter_target=clutter_level,
            clutter_actual=scenario.clutter * 100.0,
            seed=seed,
            planner=kind.value,
            success=plan is not None,
            pushes=plan.push_count if plan else 0,
            levels_used=plan.levels_used if plan else 0,
            shrink_iterations=plan.footprint.shrink_iterations if plan else 0,
            wall_time=wall_time,
        )
        logger.log_trial(record)
        records.append(record)
        monitors[kind.value] = monitor.summary()
    logger.clear_context()
    return TrialResult(tuple(records), monitors)


def _run_trial_job(job):
    clutter_level, trial, planners, settings, out_dir = job
    return run_trial(clutter_level, trial, planners, settings, out_dir)


def run_sweep(clutter_levels=CLUTTER_LEVELS, trials_per_level=TRIALS_PER_LEVEL, planners=tuple(PlannerKind),
              out_dir=None, settings=None, workers=None, plot=False):
    """
    Run the clutter sweep.

    Args:
        clutter_levels: Target clutter percentages
        trials_per_level: Seeded trials per level
        planners: PlannerKinds (or their values) to run on every trial
        out_dir: Artifact directory; results.csv and table.txt are written when given
        settings: Settings (planner parameters, time budget, workers)
        workers: Worker processes, overriding settings.workers
        plot: Also write a success bar chart (success.png)

    Returns:
        list of TrialRecord sorted by (clutter_target, seed, planner order)

    Raises:
        ScenarioIOError
    """
    settings = settings or Settings()
    workers = workers or settings.workers
    planners = tuple(PlannerKind(p).value for p in planners)
    jobs = [(level, trial, planners, settings, out_dir)
            for level in clutter_levels for trial in range(trials_per_level)]
    logging.info(f"Sweep: {len(clutter_levels)} levels x {trials_per_level} trials x "
                 f"{len(planners)} planners, {workers} worker(s)")

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_job, jobs))
    else:
        results = [_run_trial_job(job) for job in jobs]

    order = {kind.value: i for i, kind in enumerate(PlannerKind)}
    records = sorted((r for result in results for r in result.records),
                     key=lambda r: (r.clutter_target, r.seed, order[r.planner]))
    for result in results:
        for planner, summary in result.monitors.items():
            if summary['bound_violations']:
                logging.error(f"{planner}: node bound violated {summary['bound_violations']}")

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_results(records, os.path.join(out_dir, 'results.csv'), os.path.join(out_dir, 'table.txt'),
                      trials_per_level)
        if plot:
            plot_success(records, os.path.join(out_dir, 'success.png'), trials_per_level)
    return records


def replay(plan_file, scenario_file=None, scenario=None, simulator=None):
    """
    Re-simulate a stored plan from its scenario and check the result.

    Returns:
        ReplayResult with the validity report of the recomputed final state

    Raises:
        ParseError, ScenarioIOError, SchemaVersionMismatch
        ReplayMismatch: recomputed final poses differ from the stored ones
    """
    if scenario is None:
        scenario = load_scenario(scenario_file)
    stored = load_plan(plan_file)
    simulator = simulator or PushSimulator()

    state = scenario.state
    for index, push in enumerate(stored.pushes):
        outcome = simulator.replay_push(state, push.object_id, push.phi, push.distance)
        state = outcome.new_state
        logging.debug(f"Replayed push {index}: object {push.object_id}, {outcome.termination.value}")

    stored_ids = sorted(stored.final_poses)
    if stored_ids != list(range(len(state.objects))):
        raise ReplayMismatch(f"stored final state lists objects {stored_ids}, scenario has {len(state.objects)}")
    mismatched = [obj.id for obj in state.objects if obj.pose != stored.final_poses[obj.id]]
    if mismatched:
        raise ReplayMismatch(f"final poses differ for objects {mismatched}")
    report = validate_terminal(state, stored.footprint.polygons)
    return ReplayResult(report, exact_match=True)
