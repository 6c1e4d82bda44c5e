import os
import sys
import logging

import click

from bench import replay as run_replay, run_sweep, shared_endpoints
from config import CLUTTER_LEVELS, TRIALS_PER_LEVEL, load_settings
from errors import Deadline, NamoError, PlanningTimeout
from geometry import placement_heatmap, rasterize, rasterize_kernel
from monitoring import SearchMonitor, StructuredLogger
from push_physics import PushSimulator
from push_planner import PlannerKind, plan_cascade, plan_with
from scenario_io import load_scenario, save_plan, save_scenario
from svg_render import emit_svg
from sweep_report import plot_heatmap, plot_success, read_results, render_table
from world import generate_scenario, square_side_for_clutter

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_PLAN = 2


def _fail(error):
    click.echo(f"Error: {error}", err=True)
    sys.exit(EXIT_ERROR)


def _parse_levels(text):
    try:
        return tuple(float(v) for v in text.split(',') if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated percentages, got {text!r}")


@click.group()
@click.option('--log-level', default=None, help='Override NAMO_LOG_LEVEL')
def cli(log_level):
    """NAMO push planner - scenario generation, planning, sweeps and replay."""
    if log_level:
        logging.basicConfig(level=log_level.upper())


@cli.command()
@click.option('--seed', required=True, type=int, help='Scenario seed')
@click.option('--clutter', required=True, type=float, help='Target clutter percentage')
@click.option('--out', 'out_file', required=True, type=click.Path(dir_okay=False), help='Scenario JSON file')
def generate(seed, clutter, out_file):
    """Generate a seeded lattice scenario at a clutter level."""
    try:
        scenario = generate_scenario(seed, square_side_for_clutter(clutter))
        save_scenario(out_file, scenario)
    except NamoError as e:
        _fail(e)
    click.echo(f"Scenario seed={seed}: {len(scenario.state)} squares, clutter {scenario.clutter * 100:.2f}%")
    click.echo(f"  Written to {out_file}")


@cli.command()
@click.option('--scenario', 'scenario_file', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--planner', default='mincol',
              type=click.Choice(['rrt', 'straight', 'mincol', 'cascade']), help='Planner to run')
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.option('--svg/--no-svg', default=False, help='Also write an SVG trace')
@click.option('--config', 'config_file', default=None, type=click.Path(exists=True, dir_okay=False))
def plan(scenario_file, planner, out_dir, svg, config_file):
    """Plan a clear path through a stored scenario."""
    try:
        settings = load_settings(config_file)
        scenario = load_scenario(scenario_file)
        endpoints = shared_endpoints(scenario, scenario.seed)
    except NamoError as e:
        _fail(e)

    logger = StructuredLogger('namo.cli')
    monitor = SearchMonitor(logger)
    simulator = PushSimulator(push_step=settings.push_step, monitor=monitor)
    deadline = Deadline(settings.trial_time_budget)
    try:
        if planner == 'cascade':
            kind, result = plan_cascade(scenario, endpoints, settings, simulator, monitor, deadline, logger)
        else:
            kind = PlannerKind.from_name(planner)
            result = plan_with(kind, scenario, endpoints, settings, simulator, monitor, deadline, logger)
    except PlanningTimeout as e:
        click.echo(f"No plan: {e}")
        sys.exit(EXIT_NO_PLAN)
    except NamoError as e:
        _fail(e)

    if result is None:
        click.echo(f"No plan found ({monitor.summary()['pushes_simulated']} pushes simulated)")
        sys.exit(EXIT_NO_PLAN)

    try:
        plan_path = os.path.join(out_dir, 'plan.json')
        save_plan(plan_path, result)
        if svg:
            emit_svg(scenario, os.path.join(out_dir, 'plan.svg'), plan=result)
    except NamoError as e:
        _fail(e)

    click.echo(f"Plan found by {kind.value}")
    click.echo(f"  Pushes: {result.push_count}")
    click.echo(f"  Levels used: {result.levels_used}")
    click.echo(f"  Shrink iterations: {result.footprint.shrink_iterations}")
    click.echo(f"  Written to {plan_path}")


@cli.command()
@click.option('--levels', default=','.join(f"{v:g}" for v in CLUTTER_LEVELS), help='Clutter percentages')
@click.option('--trials', default=TRIALS_PER_LEVEL, type=int, help='Trials per clutter level')
@click.option('--planners', default='rrt,straight,mincol', help='Comma-separated planners')
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.option('--workers', default=None, type=int, help='Worker processes')
@click.option('--plot/--no-plot', default=False, help='Write success.png')
@click.option('--config', 'config_file', default=None, type=click.Path(exists=True, dir_okay=False))
def sweep(levels, trials, planners, out_dir, workers, plot, config_file):
    """Run the three-planner clutter sweep."""
    clutter_levels = _parse_levels(levels)
    try:
        kinds = tuple(PlannerKind.from_name(p.strip()) for p in planners.split(',') if p.strip())
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--planners')
    if trials < 0:
        raise click.BadParameter('must be >= 0', param_hint='--trials')

    try:
        settings = load_settings(config_file)
        records = run_sweep(clutter_levels, trials, kinds, out_dir, settings, workers, plot)
    except NamoError as e:
        _fail(e)

    click.echo(f"Sweep completed: {len(records)} trial records")
    click.echo(render_table(records, trials), nl=False)


@cli.command()
@click.option('--results', 'results_file', required=True, type=click.Path(exists=True, dir_okay=False),
              help='results.csv from a sweep')
@click.option('--trials', default=None, type=int, help='Trials per clutter level')
@click.option('--plot', 'plot_file', default=None, type=click.Path(dir_okay=False), help='Also write a PNG chart')
def report(results_file, trials, plot_file):
    """Re-tabulate a stored sweep."""
    try:
        frame = read_results(results_file)
        if plot_file:
            plot_success(frame, plot_file, trials)
    except NamoError as e:
        _fail(e)

    click.echo(f"{len(frame)} trial records in {results_file}")
    click.echo(render_table(frame, trials), nl=False)
    if plot_file:
        click.echo(f"  Chart written to {plot_file}")


@cli.command()
@click.option('--plan', 'plan_file', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--scenario', 'scenario_file', required=True, type=click.Path(exists=True, dir_okay=False))
def replay(plan_file, scenario_file):
    """Re-simulate a stored plan and check its final state."""
    try:
        result = run_replay(plan_file, scenario_file)
    except NamoError as e:
        _fail(e)

    click.echo(result.report.describe())
    if not result.is_valid:
        sys.exit(EXIT_NO_PLAN)
    click.echo("Replay matches the stored final state")


@cli.command()
@click.option('--scenario', 'scenario_file', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--theta', default=0.0, type=float, help='Path orientation (radians)')
@click.option('--out', 'out_file', required=True, type=click.Path(dir_okay=False), help='PNG file')
@click.option('--config', 'config_file', default=None, type=click.Path(exists=True, dir_okay=False))
def heatmap(scenario_file, theta, out_file, config_file):
    """Render the straight-path placement overlap map."""
    try:
        settings = load_settings(config_file)
        scenario = load_scenario(scenario_file)
        grid = rasterize(scenario.state.polygons(), scenario.room, settings.grid_resolution)
        kernel = rasterize_kernel(scenario.straight_path_shape, theta, settings.grid_resolution)
        values = placement_heatmap(grid, kernel)
        plot_heatmap(values, out_file)
    except NamoError as e:
        _fail(e)
    click.echo(f"Heat map {values.shape[0]}x{values.shape[1]}, minimum overlap {values.min():.3f} cm²")
    click.echo(f"  Written to {out_file}")


if __name__ == '__main__':
    cli()
