# dualsim/view/report.py
from rich import box
from rich.console import Console
from rich.table import Table
from rich.text import Text

from ..utils.text import fmt_number, fmt_p

THEME = {
    "header": "bold #FFC04D",
    "ok": "#24D67A",
    "bad": "#FF6A1A",
    "muted": "#8A97A6",
    "stripe": "on #11151B",
}


def _console(console=None):
    return console or Console(highlight=False)


def _table(title=None):
    return Table(
        title=title,
        show_header=True,
        header_style=THEME["header"],
        pad_edge=False,
        show_edge=False,
        box=box.SIMPLE,
        padding=(0, 1),
        row_styles=["", THEME["stripe"]],
    )


def render_decision(row) -> Text:
    return Text(row.decision, style=THEME["bad"] if row.reject else THEME["ok"])


def comparison_table(report):
    t = _table(f"ODE vs ABM-mean (alpha={fmt_number(report.alpha)}, {report.meta.get('pairing', 'daily-mean')})")
    t.add_column("Species", no_wrap=True)
    t.add_column("U", justify="right")
    t.add_column("p", justify="right")
    t.add_column("n", justify="right", style=THEME["muted"])
    t.add_column("Decision", no_wrap=True)
    for r in report:
        t.add_row(r.species, f"{r.statistic:g}", fmt_p(r.pvalue), f"{r.n_x}/{r.n_y}", render_decision(r))
    return t


def census_table(census):
    t = _table("Extreme cases")
    t.add_column("Predicate", no_wrap=True)
    t.add_column("Count", justify="right")
    t.add_column("Frequency", justify="right")
    for c in census:
        t.add_row(c.name, f"{c.count}/{c.total}", f"{c.frequency:.2f}")
    return t


def final_table(traj, title):
    t = _table(title)
    t.add_column("Species", no_wrap=True)
    t.add_column(f"t={fmt_number(traj.times[-1])}", justify="right")
    t.add_column("max", justify="right", style=THEME["muted"])
    for s in traj.species:
        col = traj.series(s)
        t.add_row(s, f"{col[-1]:.6g}", f"{col.max():.6g}")
    return t


def print_trajectory(traj, title, console=None):
    _console(console).print(final_table(traj, title))


def print_census(census, console=None):
    _console(console).print(census_table(census))


def print_experiment(result, console=None):
    """Tables for one experiment; the last line is the comparison decision."""
    con = _console(console)
    con.print(final_table(result.ode, f"{result.scenario}: ODE"))
    con.print(final_table(result.abm_mean, f"{result.scenario}: ABM mean of {result.ensemble.n_reps}"))
    con.print(comparison_table(result.report))
    if result.census:
        con.print(census_table(result.census))
    con.print(f"closest replication: {result.closest}  seed: {result.base_seed}", style=THEME["muted"])
    con.print(f"{result.scenario}: {result.report.summary}")


def print_sweep(results, console=None):
    t = _table("Sweep")
    t.add_column("Scenario", no_wrap=True)
    t.add_column("Seed", justify="right", style=THEME["muted"])
    t.add_column("Decision")
    t.add_column("Clamps", justify="right")
    for r in results:
        if hasattr(r, "report"):
            style = THEME["bad"] if r.report.rejected else THEME["ok"]
            t.add_row(r.scenario, str(r.base_seed), Text(r.report.summary, style=style), str(r.counters["abm_clamps"]))
        else:
            t.add_row(r.scenario, str(r.seed), Text(f"error: {r.message}", style=THEME["bad"]), "")
    _console(console).print(t)
