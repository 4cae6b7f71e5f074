# FILE: dualsim/models.py
# CONTRACT: every ModelSpec pairs an ODE right-hand side with a transition table whose
# expected drift equals it; the pairing is checked numerically when the model is built
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .abm.transitions import Effect, EngineConfig, Influx, TransitionSpec, check_table, compile_channels
from .errors import DriftMismatch, InvalidParameter, MissingRequired, UnknownKey, UnknownScenario, UsageError
from .ode import (
    CASE0_SPECIES,
    CASE1_SPECIES,
    CASE2_SPECIES,
    CASE3_SPECIES,
    RhsFunction,
    case0_derivs,
    case1_derivs,
    case2_derivs,
    case3_derivs,
)
from .params import CASE1_SCENARIOS, Case0Params, Case1Params, Case2Params, Case3Params, validate_params
from .rates import N, P, eval_rate, parse_rate_expr, sat
from .schema import EFFECTOR, IL2, TGF_BETA, TUMOUR, as_vector, check_species
from .utils.text import suggest

DRIFT_CHECK_STATES = 100
DRIFT_CHECK_SEED = 20100501
DRIFT_REL_TOL = 1e-9


@dataclass(frozen=True)
class ModelSpec:
    name: str
    species: tuple
    rhs: RhsFunction
    transitions: tuple
    influxes: tuple
    params: Any
    provenance: tuple = ()
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "species", check_species(self.species))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "influxes", tuple(self.influxes))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if tuple(self.rhs.species) != self.species:
            raise UsageError(f"{self.name}: rhs species {self.rhs.species} != {self.species}")
        check_table(self.species, self.transitions, self.influxes)
        if self.check:
            check_drift(self)


# drift


def _flux(model, state):
    """(net, gross) expected change per day, per species, implied by the transition table."""
    values = dict(zip(model.species, as_vector(state, model.species).tolist()))
    idx = {s: i for i, s in enumerate(model.species)}
    net = np.zeros(len(model.species))
    gross = np.zeros(len(model.species))
    for t in model.transitions:
        n_src = values[t.source]
        if n_src == 0:
            continue
        term = n_src * eval_rate(t.rate, values, model.params) * t.effect_sign()
        net[idx[t.target]] += term
        gross[idx[t.target]] += abs(term)
    for f in model.influxes:
        s = eval_rate(f.rate, values, model.params)
        net[idx[f.target]] += s
        gross[idx[f.target]] += abs(s)
    return net, gross


def drift(model, state):
    """Sum over channels of source count * rate * effect, plus influxes."""
    return _flux(model, state)[0]


def random_states(species, n=DRIFT_CHECK_STATES, seed=DRIFT_CHECK_SEED):
    """Non-negative test states: each component is 0 with probability 0.1, else log-uniform in [1, 1e6]."""
    rng = np.random.default_rng(seed)
    k = len(species)
    mags = 10.0 ** rng.uniform(0.0, 6.0, size=(n, k))
    zero = rng.random((n, k)) < 0.1
    return np.where(zero, 0.0, mags)


def check_drift(model, n_states=DRIFT_CHECK_STATES, seed=DRIFT_CHECK_SEED, rel_tol=DRIFT_REL_TOL):
    """Raise DriftMismatch unless drift == rhs at every sampled state."""
    worst = 0.0
    for y in random_states(model.species, n_states, seed):
        expected = model.rhs(0.0, y)
        net, gross = _flux(model, y)
        scale = np.maximum(np.maximum(gross, np.abs(expected)), 1.0)
        err = np.abs(net - expected) / scale
        i = int(np.argmax(err))
        if err[i] > rel_tol:
            state = dict(zip(model.species, y.tolist()))
            raise DriftMismatch(model.name, model.species[i], float(expected[i]), float(net[i]), state)
        worst = max(worst, float(err[i]))
    return worst


# builders

T, E, I, S = N(TUMOUR), N(EFFECTOR), N(IL2), N(TGF_BETA)


def _model(name, species, kernel, params, transitions, influxes=(), provenance=()):
    validate_params(params)
    return ModelSpec(name, species, RhsFunction(species, kernel, params), transitions, influxes, params, provenance)


def build_case0(params=None):
    params = params or Case0Params()
    rate = P("a") * T ** (P("alpha") - 1) - P("b") * T ** (P("beta") - 1)
    return _model(
        "case0",
        CASE0_SPECIES,
        case0_derivs,
        params,
        [TransitionSpec("tumour_net_growth", TUMOUR, rate, Effect.SIGNED)],
        provenance=("death written as b*T^beta; beta = 1 gives the printed b*T",),
    )


def case1_params(scenario, overrides=None):
    if scenario not in CASE1_SCENARIOS:
        name = f"case1-s{scenario}"
        raise UnknownScenario(name, suggest(name, [f"case1-s{k}" for k in CASE1_SCENARIOS]))
    return Case1Params(**CASE1_SCENARIOS[scenario]).with_overrides(overrides)


def build_case1(scenario=1, overrides=None, params=None):
    params = params or case1_params(scenario, overrides)
    return _model(
        f"case1-s{scenario}",
        CASE1_SPECIES,
        case1_derivs,
        params,
        [
            TransitionSpec("tumour_net_growth", TUMOUR, P("a") * (1 - P("b") * T), Effect.SIGNED),
            TransitionSpec("tumour_killed_by_effector", TUMOUR, P("n") * E, Effect.REMOVE_SELF),
            TransitionSpec("cause_effector_damage", TUMOUR, P("m") * E, Effect.REMOVE_TARGET, EFFECTOR),
            TransitionSpec("effector_proliferation", EFFECTOR, P("p") * sat(T, P("g")), Effect.SPAWN, EFFECTOR),
            TransitionSpec("effector_death", EFFECTOR, P("d"), Effect.REMOVE_SELF),
        ],
        [Influx("treatment", EFFECTOR, P("s"))],
        provenance=(
            "cause_effector_damage fires per tumour cell at m*Effector; the printed row 'm' would aggregate to m*T, not m*T*E",
        ),
    )


def build_case2(params=None):
    params = params or Case2Params()
    return _model(
        "case2",
        CASE2_SPECIES,
        case2_derivs,
        params,
        [
            TransitionSpec("tumour_net_growth", TUMOUR, P("a") * (1 - P("b") * T), Effect.SIGNED),
            TransitionSpec("effector_recruitment", TUMOUR, P("c"), Effect.SPAWN, EFFECTOR),
            TransitionSpec("effector_proliferation", EFFECTOR, P("p1") * sat(I, P("g1")), Effect.SPAWN, EFFECTOR),
            TransitionSpec("effector_death", EFFECTOR, P("mu2"), Effect.REMOVE_SELF),
            TransitionSpec("kill_tumour", EFFECTOR, P("aa") * sat(T, P("g2")), Effect.REMOVE_TARGET, TUMOUR),
            TransitionSpec("il2_production", EFFECTOR, P("p2") * sat(T, P("g3")), Effect.SPAWN, IL2),
            TransitionSpec("il2_loss", IL2, P("mu3"), Effect.REMOVE_SELF),
        ],
        [Influx("treatment_s1", EFFECTOR, P("s1")), Influx("treatment_s2", IL2, P("s2"))],
        provenance=(
            "effector recruitment c attached per tumour cell so it aggregates to c*T",
            "IL-2 production p2*T/(g3+T) attached per effector so it aggregates to p2*E*T/(g3+T)",
            "tumour growth sign follows the transition table: logistic growth positive, effector kill negative",
        ),
    )


def _case3_proliferation():
    # mirrors ode.tgf_net_proliferation; swap both together
    return (P("p1") - P("q1") * sat(S, P("q2"))) * sat(I, P("g1"))


def build_case3(params=None):
    params = params or Case3Params()
    return _model(
        "case3",
        CASE3_SPECIES,
        case3_derivs,
        params,
        [
            TransitionSpec("effector_net_proliferation", EFFECTOR, _case3_proliferation(), Effect.SIGNED),
            TransitionSpec("effector_death", EFFECTOR, P("mu1"), Effect.REMOVE_SELF),
            TransitionSpec("kill_tumour", EFFECTOR, P("aa") * sat(T, P("g2")), Effect.REMOVE_TARGET, TUMOUR),
            TransitionSpec(
                "il2_production", EFFECTOR, P("p3") * T / ((P("g4") + T) * (1 + P("alpha") * S)), Effect.SPAWN, IL2
            ),
            TransitionSpec("tumour_net_growth", TUMOUR, P("a") * (1 - T / P("K")), Effect.SIGNED),
            TransitionSpec("tgf_production", TUMOUR, P("p4") * T / (P("theta") ** 2 + T**2), Effect.SPAWN, TGF_BETA),
            TransitionSpec("tumour_growth_stimulation", TUMOUR, P("p2") * sat(S, P("g3")), Effect.SPAWN, TUMOUR),
            TransitionSpec("effector_recruitment", TUMOUR, P("c") / (1 + P("gamma") * S), Effect.SPAWN, EFFECTOR),
            TransitionSpec("il2_loss", IL2, P("mu2"), Effect.REMOVE_SELF),
            TransitionSpec("tgf_decay", TGF_BETA, P("mu3"), Effect.REMOVE_SELF),
        ],
        provenance=(
            "tumour_growth_stimulation attached per tumour cell at p2*S/(g3+S); the printed row on TGF-beta agents aggregates to p2*S^2/(g3+S)",
            "effector net proliferation (p1 - q1*S/(q2+S))*I/(g1+I) is reconstructed from the model description",
            "K is not tabulated; default 1e9",
        ),
    )


# user-defined models: the ODE is the table's own drift


class TableDrift:
    """Right-hand side read off a transition table. Compiles lazily; picklable."""

    def __init__(self, species, transitions, influxes, params):
        self.species = tuple(species)
        self.transitions = tuple(transitions)
        self.influxes = tuple(influxes)
        self.params = dict(params)
        self._chans = None

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_chans"] = None
        return state

    def derivs(self, y):
        if self._chans is None:
            self._chans = compile_channels(self)
            self._sign = np.array([t.effect_sign() for t in self.transitions])
        ch = self._chans
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        out = np.zeros(len(self.species))
        if len(self.transitions):
            np.add.at(out, ch.tgt, y[ch.src] * ch.rates(y) * self._sign)
        if ch.influx_fns:
            np.add.at(out, ch.influx_tgt, ch.influx_rates(y))
        return out


def table_derivs(t, y, table):
    return table.derivs(y)


class ChannelDef(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    source: str
    rate: str
    effect: Effect
    target: Optional[str] = None


class InfluxDef(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    target: str
    rate: str


class CustomModel(BaseModel):
    """Inline model from a config document; formulas use the rate grammar."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "custom"
    species: List[str]
    params: Dict[str, float] = Field(default_factory=dict)
    transitions: List[ChannelDef] = Field(default_factory=list)
    influxes: List[InfluxDef] = Field(default_factory=list)

    def build(self, overrides=None):
        params = dict(self.params)
        for k, v in (overrides or {}).items():
            if k not in params:
                raise UnknownKey(k, suggest(k, params))
            params[k] = float(v)
        for k, v in params.items():
            if not math.isfinite(v):
                raise InvalidParameter(k, f"must be finite, got {v!r}")
        species = check_species(self.species)
        ts = [
            TransitionSpec(c.name, c.source, parse_rate_expr(c.rate, params, species), c.effect, c.target)
            for c in self.transitions
        ]
        fs = [Influx(f.name, f.target, parse_rate_expr(f.rate, params, species)) for f in self.influxes]
        check_table(species, ts, fs)
        table = TableDrift(species, ts, fs, params)
        return ModelSpec(self.name, species, RhsFunction(species, table_derivs, table), ts, fs, params, check=False)


# scenarios

CASE1_INIT = {TUMOUR: 100, EFFECTOR: 5}
LARGE_INIT = {TUMOUR: 10_000, EFFECTOR: 1_000, IL2: 1_000, TGF_BETA: 0}
# IL-2 clears at 10/day; a 0.1 guard leaves its tau-leap plateau about 5% above the ODE
FINE_ENGINE = EngineConfig(max_rate_dt=0.01)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    case: Optional[int] = None
    scenario: Optional[int] = None
    overrides: Dict[str, float] = Field(default_factory=dict)
    init: Dict[str, float] = Field(default_factory=dict)
    horizon: float = 100.0
    engine: EngineConfig = Field(default_factory=EngineConfig)
    n_reps: int = 50
    description: str = ""
    custom_model: Optional[CustomModel] = None

    @field_validator("horizon")
    @classmethod
    def _horizon(cls, v):
        if not v > 0:
            raise InvalidParameter("horizon", f"must be > 0, got {v!r}")
        return v

    @field_validator("n_reps")
    @classmethod
    def _reps(cls, v):
        if v < 1:
            raise InvalidParameter("n_reps", f"must be >= 1, got {v!r}")
        return v

    @field_validator("init")
    @classmethod
    def _init(cls, v):
        for k, n in v.items():
            if n < 0 or not float(n).is_integer():
                raise InvalidParameter(f"init.{k}", f"must be a non-negative integer, got {n!r}")
        return v

    @model_validator(mode="after")
    def _case(self):
        if self.custom_model is None:
            if self.case not in (0, 1, 2, 3):
                raise MissingRequired("case (0-3) or an inline model")
            if self.case == 1 and self.scenario is None:
                raise MissingRequired("scenario (1-4) for case 1")
        return self

    @property
    def species(self):
        if self.custom_model is not None:
            return tuple(self.custom_model.species)
        return (CASE0_SPECIES, CASE1_SPECIES, CASE2_SPECIES, CASE3_SPECIES)[self.case]

    def build_model(self):
        if self.custom_model is not None:
            return self.custom_model.build(self.overrides)
        if self.case == 0:
            return build_case0(Case0Params().with_overrides(self.overrides))
        if self.case == 1:
            return build_case1(self.scenario, self.overrides)
        if self.case == 2:
            return build_case2(Case2Params().with_overrides(self.overrides))
        return build_case3(Case3Params().with_overrides(self.overrides))

    def initial_state(self):
        """Species-ordered initial counts; species missing from `init` start at 0."""
        return as_vector(self.init, self.species, dtype=np.int64)


def scenario_registry(include_extras=False):
    """Built-in scenarios, in listing order."""
    out = [
        ScenarioConfig(
            name="case0",
            case=0,
            init={TUMOUR: 10},
            horizon=100.0,
            description="power-law tumour growth, no immune response",
        )
    ]
    for k, blurb in [
        (1, "treated, tumour decays to zero"),
        (2, "fast apoptosis, tumour plateaus near 240"),
        (3, "lower treatment rate"),
        (4, "no treatment"),
    ]:
        out.append(
            ScenarioConfig(
                name=f"case1-s{k}", case=1, scenario=k, init=dict(CASE1_INIT), horizon=100.0, description=blurb
            )
        )
    out.append(
        ScenarioConfig(
            name="case2",
            case=2,
            init={s: LARGE_INIT[s] for s in CASE2_SPECIES},
            horizon=600.0,
            engine=FINE_ENGINE,
            description="tumour, effector and IL-2",
        )
    )
    out.append(
        ScenarioConfig(
            name="case3",
            case=3,
            init=dict(LARGE_INIT),
            horizon=600.0,
            engine=FINE_ENGINE,
            description="tumour, effector, IL-2 and TGF-beta",
        )
    )
    if include_extras:
        out.append(
            ScenarioConfig(
                name="case2-small",
                case=2,
                init={TUMOUR: 100, EFFECTOR: 10, IL2: 10},
                horizon=600.0,
                engine=FINE_ENGINE,
                description="case 2 at small population sizes (not checked against reference results)",
            )
        )
    return out


def get_scenario(name):
    table = {s.name: s for s in scenario_registry(include_extras=True)}
    if name not in table:
        raise UnknownScenario(name, suggest(name, table))
    return table[name]
