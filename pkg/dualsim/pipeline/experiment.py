# FILE: dualsim/pipeline/experiment.py
# CONTRACT: run_experiment is a pure function of (config, base_seed) apart from wall-clock
# metadata; sweep keeps going past failing items and returns results in input order
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional

from pydantic import ValidationError

from ..errors import DualsimError, ExperimentError, UsageError
from ..models import ScenarioConfig, get_scenario
from ..stats import default_predicates
from ..utils import log
from ..utils.rng import derive_seed
from .compare import closest_replication, run_census, run_compare
from .simulate import run_abm, run_ode

KEEP_REPS = 50


@dataclass(frozen=True)
class ExperimentResult:
    scenario: str
    base_seed: int
    config: ScenarioConfig
    ode: object
    ensemble: object
    report: object
    census: tuple
    closest: int
    counters: Mapping = field(default_factory=dict)
    timing: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "census", tuple(self.census))
        object.__setattr__(self, "counters", dict(self.counters))
        object.__setattr__(self, "timing", dict(self.timing))

    @property
    def abm_mean(self):
        return self.ensemble.mean


@dataclass(frozen=True)
class SweepFailure:
    scenario: str
    error: Exception
    seed: Optional[int] = None

    @property
    def message(self):
        return str(self.error)


def run_experiment(config, base_seed=0, alpha=0.05, pairing="daily-mean", predicates=None, keep_reps=KEEP_REPS):
    """ODE baseline, agent ensemble, rank-sum comparison and census for one scenario."""
    started = time.perf_counter()
    try:
        model = config.build_model()
        ode = run_ode(config, model)
        t_ode = time.perf_counter()
        ens = run_abm(config, base_seed, model)
        t_abm = time.perf_counter()
        report = run_compare(ode, ens, alpha, pairing, meta={"scenario": config.name, "base_seed": base_seed})
        preds = predicates if predicates is not None else default_predicates(model.species)
        census = run_census(ens, preds)
        closest = closest_replication(ens, ode)
    except DualsimError as e:
        if isinstance(e, ExperimentError):
            raise
        raise ExperimentError(config.name, e) from e
    done = time.perf_counter()
    counters = {
        "ode_clamps": ode.meta["clamps"],
        "abm_clamps": sum(r.meta["clamps"] for r in ens.replications),
        "subdivided_steps": sum(r.meta["subdivided_steps"] for r in ens.replications),
        "n_reps": ens.n_reps,
    }
    timing = {"ode_s": t_ode - started, "abm_s": t_abm - t_ode, "total_s": done - started}
    return ExperimentResult(
        config.name, base_seed, config, ode, ens.trimmed(keep_reps), report, census, closest, counters, timing
    )


def _resolve(item):
    if isinstance(item, ScenarioConfig):
        return item
    if isinstance(item, str):
        return get_scenario(item)
    return ScenarioConfig(**item)


def _label(item):
    if isinstance(item, ScenarioConfig):
        return item.name
    if isinstance(item, str):
        return item
    return str(dict(item).get("name", "?"))


def sweep(configs, base_seed=0, **kwargs):
    """One experiment per item (ScenarioConfig, registry name or dict); seeds derived per scenario name."""
    configs = list(configs)
    if not configs:
        raise UsageError("sweep needs at least one scenario")
    out = []
    for item in configs:
        name = _label(item)
        seed = derive_seed(base_seed, name)
        try:
            cfg = _resolve(item)
            out.append(run_experiment(cfg, seed, **kwargs))
        except (DualsimError, ValidationError) as e:
            cause = e.cause if isinstance(e, ExperimentError) else e
            log.warn(f"sweep: {name} failed", error=cause)
            out.append(SweepFailure(name, cause, seed))
    log.ok(scenarios=len(out), failed=sum(isinstance(r, SweepFailure) for r in out))
    return out
