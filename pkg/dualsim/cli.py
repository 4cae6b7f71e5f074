# FILE: dualsim/cli.py
# CONTRACT: exit 0 on success, 1 on usage errors, 2 on runtime errors; errors go to stderr,
# summaries to stdout
import argparse
import json
import os
import sys

from pydantic import ValidationError

from . import __version__
from .config import SERIES, load_config_file, parse_config
from .doctor import run_doctor
from .errors import DualsimError, ExperimentError, UsageError
from .models import scenario_registry
from .pipeline.compare import run_census
from .pipeline.experiment import run_experiment, sweep
from .pipeline.simulate import run_abm, run_ode
from .settings import get_paths, load_config
from .stats import default_predicates
from .utils import log
from .utils.io import timestamp_run_id
from .view import report
from .view.export import census_csv, trajectory_csv, write_result, write_run
from .view.plot import write_plots

SWEEP_DEFAULT = ["case1-s1", "case1-s2", "case1-s3", "case1-s4"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, abm=True):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--scenario", help="registry name (see list-scenarios)")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="parameter override")
    p.add_argument("--horizon", type=float, help="days")
    p.add_argument("--dt", type=float, help="step size in days")
    p.add_argument("--out", help="output root (default: settings output_dir)")
    p.add_argument("--no-write", action="store_true", help="do not write CSV files")
    p.add_argument("--plot", action="store_true", help="also write one SVG per species")
    p.add_argument("--verbose", action="store_true")
    if abm:
        p.add_argument("--seed", type=int)
        p.add_argument("--n-reps", type=int)
        p.add_argument("--backend", choices=["tau-leap", "per-agent"])
        p.add_argument("--rate-policy", choices=["live", "frozen-at-birth"])
        p.add_argument("--workers", type=int, help="processes per ensemble")
        p.add_argument("--reps-plot", type=int, metavar="N", help="replications overlaid on plots")


def build_parser():
    ap = _Parser(prog="dualsim", description="ODE vs agent-based tumour-immune simulations")
    ap.add_argument("--version", action="version", version=f"dualsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run-ode", help="integrate the ODE model")
    _common(p, abm=False)
    p.add_argument("--adaptive", action="store_true", help="use the adaptive RK4(5) integrator")
    p.add_argument("--csv", action="store_true", help="print the CSV to stdout instead of the summary")

    p = sub.add_parser("run-abm", help="run the agent-based ensemble")
    _common(p)
    p.add_argument("--all-reps", action="store_true", help="also write every replication")

    p = sub.add_parser("compare", help="ODE vs ABM-mean rank-sum comparison")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--pairing", choices=["daily-mean", "endpoint"])

    p = sub.add_parser("census", help="count extreme outcomes over the ensemble")
    _common(p)
    p.add_argument("--predicate", action="append", default=[], help="e.g. tumour-extinct-by(200)")

    p = sub.add_parser("list-scenarios", help="print the built-in scenarios")
    p.add_argument("--all", action="store_true", help="include extra scenarios")

    p = sub.add_parser("sweep", help="run several scenarios with derived seeds")
    p.add_argument("scenarios", nargs="*", default=SWEEP_DEFAULT)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-reps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")
    p.add_argument("--no-write", action="store_true")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--reps-plot", type=int, metavar="N")
    p.add_argument("--verbose", action="store_true")
    return ap


# resolution helpers


def _params(pairs):
    out = {}
    for item in pairs:
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param {name}: {value!r} is not a number") from None
    return out


def _document(args):
    """Config file (if any) with command-line flags layered on top."""
    data = {}
    if args.config:
        data = load_config_file(args.config).model_dump(exclude_unset=True, mode="json")
    if args.scenario:
        data.pop("model", None)
        data["scenario"] = args.scenario
    params = _params(args.param)
    if params:
        data["params"] = {**data.get("params", {}), **params}
    for flag, key in [("horizon", "horizon"), ("n_reps", "n_reps"), ("seed", "seed"), ("alpha", "alpha"), ("pairing", "pairing")]:
        v = getattr(args, flag, None)
        if v is not None:
            data[key] = v
    engine = dict(data.get("engine", {}))
    for flag, key in [("dt", "dt"), ("backend", "backend"), ("rate_policy", "rate_policy"), ("workers", "workers")]:
        v = getattr(args, flag, None)
        if v is not None:
            engine[key] = v
    if engine:
        data["engine"] = engine
    if not data.get("scenario") and not data.get("model"):
        raise UsageError("give --scenario NAME or --config FILE")
    return parse_config(json.dumps(data))


def resolve_seed(flag, doc_seed, settings_seed=0):
    """--seed > config "seed" > $DUALSIM_SEED > settings seed."""
    if flag is not None:
        return flag
    if doc_seed is not None:
        return doc_seed
    env = os.getenv("DUALSIM_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DUALSIM_SEED must be an integer, got {env!r}") from None
    return int(settings_seed or 0)


def _engine_defaults(cfg):
    return {**cfg.get("engine", {}), "workers": int(cfg.get("concurrency", 1))}


def _out_root(args, doc, cfg):
    if getattr(args, "out", None):
        return args.out
    if doc is not None and doc.outputs.dir:
        return doc.outputs.dir
    return str(get_paths(cfg)["OUTPUT_DIR"])


def _plot_reps(args, doc, cfg):
    if getattr(args, "reps_plot", None) is not None:
        return args.reps_plot
    if doc is not None and "reps_plot" in doc.outputs.model_fields_set:
        return doc.outputs.reps_plot
    return int(cfg.get("plot", {}).get("reps", 10))


def _wants_plot(args, doc):
    return bool(args.plot or (doc is not None and doc.outputs.plot))


def _write(args, doc, cfg, scenario, files, plot=None):
    if args.no_write:
        return
    run_dir, written = write_run(_out_root(args, doc, cfg), scenario, files, timestamp_run_id(), plot)
    log.info(f"Wrote: {run_dir}", files=len(written))


def _write_result(args, doc, cfg, result, series=SERIES):
    if args.no_write:
        return
    reps = _plot_reps(args, doc, cfg) if _wants_plot(args, doc) else None
    run_dir, written = write_result(result, _out_root(args, doc, cfg), series, timestamp_run_id(), reps)
    log.info(f"Wrote: {run_dir}", files=len(written))


# commands


def cmd_run_ode(args, cfg):
    doc = _document(args)
    scen = doc.to_scenario(_engine_defaults(cfg))
    traj = run_ode(scen, adaptive=args.adaptive)
    text = trajectory_csv(traj)
    plot = (lambda d: write_plots(d, scen.name, ode=traj)) if _wants_plot(args, doc) else None
    _write(args, doc, cfg, scen.name, {"ode.csv": text}, plot)
    if args.csv:
        print(text)
    else:
        report.print_trajectory(traj, f"{scen.name}: ODE ({traj.meta['scheme']})")


def cmd_run_abm(args, cfg):
    doc = _document(args)
    scen = doc.to_scenario(_engine_defaults(cfg))
    seed = resolve_seed(args.seed, doc.seed, cfg.get("seed"))
    ens = run_abm(scen, seed)
    files = {"abm-mean.csv": trajectory_csv(ens.mean)}
    if args.all_reps:
        files.update({f"abm-rep-{k}.csv": trajectory_csv(r) for k, r in enumerate(ens.replications)})
    reps = _plot_reps(args, doc, cfg)
    plot = (lambda d: write_plots(d, scen.name, ensemble=ens, reps=reps)) if _wants_plot(args, doc) else None
    _write(args, doc, cfg, scen.name, files, plot)
    report.print_trajectory(ens.mean, f"{scen.name}: ABM mean of {ens.n_reps} (seed {seed})")


def _alpha(args, doc, cfg):
    if getattr(args, "alpha", None) is not None:
        return args.alpha
    if doc is not None and "alpha" in doc.model_fields_set:
        return doc.alpha
    return float(cfg.get("stats", {}).get("alpha", 0.05))


def _pairing(args, doc, cfg):
    if getattr(args, "pairing", None):
        return args.pairing
    if doc is not None and "pairing" in doc.model_fields_set:
        return doc.pairing
    return cfg.get("stats", {}).get("pairing", "daily-mean")


def _predicates(args, doc, cfg, species):
    chosen = list(getattr(args, "predicate", []) or [])
    if not chosen and doc is not None and doc.census:
        chosen = list(doc.census)
    if chosen:
        return chosen
    c = cfg.get("census", {})
    return default_predicates(species, float(c.get("tumour_extinct_by", 200.0)), float(c.get("tgf_max_below", 3.0)))


def cmd_compare(args, cfg):
    doc = _document(args)
    scen = doc.to_scenario(_engine_defaults(cfg))
    seed = resolve_seed(args.seed, doc.seed, cfg.get("seed"))
    result = run_experiment(
        scen,
        seed,
        alpha=_alpha(args, doc, cfg),
        pairing=_pairing(args, doc, cfg),
        predicates=_predicates(args, doc, cfg, scen.species),
    )
    _write_result(args, doc, cfg, result, list(doc.outputs.series))
    report.print_experiment(result)


def cmd_census(args, cfg):
    doc = _document(args)
    scen = doc.to_scenario(_engine_defaults(cfg))
    seed = resolve_seed(args.seed, doc.seed, cfg.get("seed"))
    ens = run_abm(scen, seed)
    rows = run_census(ens, _predicates(args, doc, cfg, scen.species))
    _write(args, doc, cfg, scen.name, {"census.csv": census_csv(rows)})
    report.print_census(rows)


def cmd_list_scenarios(args, cfg):
    for s in scenario_registry(include_extras=args.all):
        print(f"{s.name}\t{int(s.horizon)} days\t{s.n_reps} reps\t{s.description}")


def cmd_sweep(args, cfg):
    seed = resolve_seed(args.seed, None, cfg.get("seed"))
    defaults = _engine_defaults(cfg)
    if args.workers is not None:
        defaults["workers"] = args.workers
    items = []
    for name in args.scenarios:
        data = {"scenario": name}
        if args.n_reps is not None:
            data["n_reps"] = args.n_reps
        try:
            items.append(parse_config(json.dumps(data)).to_scenario(defaults))
        except DualsimError:
            items.append(name)  # recorded as a failed item by sweep
    results = sweep(items, seed, alpha=_alpha(args, None, cfg), pairing=_pairing(args, None, cfg))
    for r in results:
        if hasattr(r, "report"):
            _write_result(args, None, cfg, r)
    report.print_sweep(results)
    return 2 if any(not hasattr(r, "report") for r in results) else 0


COMMANDS = {
    "run-ode": cmd_run_ode,
    "run-abm": cmd_run_abm,
    "compare": cmd_compare,
    "census": cmd_census,
    "list-scenarios": cmd_list_scenarios,
    "sweep": cmd_sweep,
}


def exit_code(err):
    if isinstance(err, ExperimentError):
        err = err.cause
    return 1 if isinstance(err, (UsageError, ValidationError)) else 2


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config()
        log.set_verbose(getattr(args, "verbose", False) or cfg.get("debug", False))
        if args.command != "list-scenarios":
            run_doctor(cfg, need_plot=bool(getattr(args, "plot", False)))
        return COMMANDS[args.command](args, cfg) or 0
    except (DualsimError, ValidationError) as e:
        log.error(str(e))
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
