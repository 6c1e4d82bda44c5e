"""
Sweep result tables: trial records as a pandas DataFrame, the success
count table (clutter level by planner), CSV and text output, and a bar
chart of success counts.
"""
import logging

import pandas as pd
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

from errors import ScenarioIOError

CSV_COLUMNS = ['clutter_target', 'clutter_actual', 'seed', 'planner', 'success', 'pushes',
               'levels_used', 'shrink_iterations', 'wall_time']
PLANNER_ORDER = ['RRT_CONNECT', 'STRAIGHT_LINE', 'MIN_COLLISION']


def records_to_frame(records):
    """TrialRecords as a DataFrame sorted by (clutter_target, seed, planner)."""
    frame = pd.DataFrame([r.as_row() for r in records], columns=CSV_COLUMNS)
    if frame.empty:
        return frame
    order = {name: i for i, name in enumerate(PLANNER_ORDER)}
    frame['_order'] = frame['planner'].map(order)
    frame = frame.sort_values(['clutter_target', 'seed', '_order']).drop(columns='_order')
    return frame.reset_index(drop=True)


def _as_frame(records):
    return records if isinstance(records, pd.DataFrame) else records_to_frame(records)


def success_table(records):
    """
    Successful plans per clutter level and planner.

    Args:
        records: TrialRecords, or a results frame as read by read_results

    Returns:
        DataFrame indexed by clutter_target with one column per planner present
    """
    frame = _as_frame(records)
    if frame.empty:
        return pd.DataFrame(columns=PLANNER_ORDER, dtype=int)
    table = frame.pivot_table(index='clutter_target', columns='planner', values='success',
                              aggfunc='sum', fill_value=0).astype(int)
    columns = [p for p in PLANNER_ORDER if p in table.columns]
    table = table[columns]
    table.columns.name = None
    return table


def render_table(records, trials_per_level=None):
    """Success counts as plain text, one row per clutter level."""
    table = success_table(records)
    header = ['Clutter %'] + PLANNER_ORDER
    lines = [' | '.join(f"{h:>13}" for h in header)]
    lines.append('-' * len(lines[0]))
    for level, row in table.iterrows():
        cells = [f"{level:>13g}"]
        for planner in PLANNER_ORDER:
            value = row[planner] if planner in row.index else None
            text = '-' if value is None else (f"{value}/{trials_per_level}" if trials_per_level else f"{value}")
            cells.append(f"{text:>13}")
        lines.append(' | '.join(cells))
    return '\n'.join(lines) + '\n'


def write_results(records, csv_path, table_path=None, trials_per_level=None):
    """Write results.csv (and the text table) for a sweep."""
    try:
        records_to_frame(records).to_csv(csv_path, index=False)
        if table_path:
            with open(table_path, 'w', encoding='utf-8') as f:
                f.write(render_table(records, trials_per_level))
    except OSError as e:
        raise ScenarioIOError(f"cannot write sweep results: {e}")
    logging.info(f"Wrote {len(records)} trial records to {csv_path}")


def read_results(csv_path):
    """
    Load a results.csv written by write_results.

    Raises:
        ScenarioIOError: unreadable file or missing columns
    """
    try:
        frame = pd.read_csv(csv_path)
    except (OSError, pd.errors.EmptyDataError) as e:
        raise ScenarioIOError(f"cannot read {csv_path}: {e}")
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ScenarioIOError(f"{csv_path} lacks columns {missing}")
    return frame


def plot_success(records, out_path, trials_per_level=None):
    """Grouped bar chart of success counts per clutter level."""
    table = success_table(records)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if not table.empty:
        table.plot.bar(ax=ax, rot=0)
    ax.set_xlabel('Clutter (%)')
    ax.set_ylabel('Successful plans')
    if trials_per_level:
        ax.set_ylim(0, trials_per_level)
    ax.set_title('Successful plans per clutter level')
    fig.tight_layout()
    try:
        fig.savefig(out_path)
    except OSError as e:
        raise ScenarioIOError(f"cannot write {out_path}: {e}")
    finally:
        plt.close(fig)
    logging.info(f"Wrote success plot {out_path}")


def plot_heatmap(heatmap, out_path, title='Path placement overlap (cm²)'):
    """Render a placement heat map; rows run along +y."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    image = ax.imshow(heatmap, origin='lower', cmap='viridis')
    fig.colorbar(image, ax=ax)
    ax.set_title(title)
    ax.set_xlabel('column')
    ax.set_ylabel('row')
    fig.tight_layout()
    try:
        fig.savefig(out_path)
    except OSError as e:
        raise ScenarioIOError(f"cannot write {out_path}: {e}")
    finally:
        plt.close(fig)
