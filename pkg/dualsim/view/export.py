# FILE: dualsim/view/export.py
# CONTRACT: CSV text for every series of an experiment; files are written atomically
# and the newest run per scenario is mirrored under <scenario>_latest
import csv
import io
import os
import re

from ..errors import NoSuchSeries
from ..utils.io import safe_write_text, timestamp_run_id, write_latest_alias
from ..utils.text import fmt_number

_REP = re.compile(r"^abm-rep-(\d+)$")


def _rows_to_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().rstrip("\n")


def trajectory_csv(traj):
    """Header "t,<species...>" then one row per sample."""
    rows = ([fmt_number(t)] + [fmt_number(v) for v in row] for t, row in zip(traj.times, traj.values.tolist()))
    return _rows_to_text(["t", *traj.species], rows)


def report_csv(report):
    rows = ([r.species, fmt_number(r.statistic), fmt_number(r.pvalue), r.decision] for r in report)
    return _rows_to_text(["species", "U", "p", "decision"], rows)


def census_csv(census):
    rows = ([c.name, c.count, c.total, fmt_number(c.frequency)] for c in census)
    return _rows_to_text(["predicate", "count", "total", "frequency"], rows)


def available_series(result):
    names = ["ode", "abm-mean", "report", "census"]
    names += [f"abm-rep-{k}" for k in range(len(result.ensemble.replications))]
    return names


def emit_csv(result, which):
    """CSV text for one series: ode | abm-mean | abm-rep-<k> | report | census."""
    if which == "ode":
        return trajectory_csv(result.ode)
    if which == "abm-mean":
        return trajectory_csv(result.ensemble.mean)
    if which == "report":
        return report_csv(result.report)
    if which == "census":
        return census_csv(result.census)
    m = _REP.match(which)
    if m and int(m.group(1)) < len(result.ensemble.replications):
        return trajectory_csv(result.ensemble.replications[int(m.group(1))])
    shown = available_series(result)
    if len(shown) > 8:
        shown = shown[:5] + [f"abm-rep-0..{len(result.ensemble.replications) - 1}"]
    raise NoSuchSeries(which, shown)


def parse_csv(text):
    """(header, rows) with numeric cells converted back to int/float."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, [])
    rows = []
    for raw in reader:
        rows.append([_cell(c) for c in raw])
    return header, rows


def _cell(c):
    try:
        return int(c)
    except ValueError:
        pass
    try:
        return float(c)
    except ValueError:
        return c


def write_run(out_root, scenario, files, run_id=None, plot=None):
    """Write {filename: text} under <out_root>/<scenario>_<run_id>/ and refresh <scenario>_latest.

    plot: optional callable(run_dir) -> paths, run before the latest copy is taken.
    """
    run_id = run_id or timestamp_run_id()
    run_dir = os.path.join(out_root, f"{scenario}_{run_id}")
    written = {name: safe_write_text(text, os.path.join(run_dir, name)) for name, text in files.items()}
    if plot is not None:
        for p in plot(run_dir):
            written[os.path.basename(str(p))] = p
    write_latest_alias(run_dir, os.path.join(out_root, f"{scenario}_latest"))
    return run_dir, written


def result_files(result, series=("ode", "abm-mean", "report", "census")):
    """{filename: csv text} for an experiment; "abm-reps" expands to every kept replication."""
    files = {}
    for which in series:
        if which == "abm-reps":
            for k in range(len(result.ensemble.replications)):
                files[f"abm-rep-{k}.csv"] = emit_csv(result, f"abm-rep-{k}")
            continue
        files[f"{which}.csv"] = emit_csv(result, which)
    return files


def write_result(result, out_root, series=("ode", "abm-mean", "report", "census"), run_id=None, plot_reps=None):
    plot = None
    if plot_reps is not None:
        from .plot import write_plots

        def plot(run_dir):
            return write_plots(run_dir, result.scenario, result.ode, result.ensemble, plot_reps)

    return write_run(out_root, result.scenario, result_files(result, series), run_id, plot)
