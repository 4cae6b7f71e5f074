# FILE: dualsim/abm/transitions.py
# CONTRACT: declarative stochastic channels + engine settings; compile_channels() turns a
# model's table into index arrays and closures the steppers can run without lookups
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..errors import DivisionByZero, UndeclaredSpecies, UsageError
from ..rates import compile_rate, lift, species_used
from ..schema import steps_between


class Effect(str, Enum):
    SPAWN = "spawn"  # add one agent of `target`
    REMOVE_SELF = "remove-self"  # the firing agent dies
    REMOVE_TARGET = "remove-target"  # message: one random alive agent of `target` dies
    SIGNED = "signed-branch"  # rate > 0 replicates the source, rate < 0 kills it


class RatePolicy(str, Enum):
    LIVE = "live"
    FROZEN_AT_BIRTH = "frozen-at-birth"


class Backend(str, Enum):
    TAU_LEAP = "tau-leap"
    PER_AGENT = "per-agent"


@dataclass(frozen=True)
class TransitionSpec:
    """One channel. `rate` is per source agent per day."""

    name: str
    source: str
    rate: object
    effect: Effect
    target: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "rate", lift(self.rate))
        object.__setattr__(self, "effect", Effect(self.effect))
        if self.effect in (Effect.SPAWN, Effect.REMOVE_TARGET) and not self.target:
            raise UsageError(f"channel {self.name}: {self.effect.value} needs a target species")
        if self.effect in (Effect.REMOVE_SELF, Effect.SIGNED):
            if self.target not in (None, self.source):
                raise UsageError(f"channel {self.name}: {self.effect.value} acts on its own source")
            object.__setattr__(self, "target", self.source)

    def effect_sign(self):
        """Signed change of `target` per unit of (source count * rate)."""
        return -1.0 if self.effect in (Effect.REMOVE_SELF, Effect.REMOVE_TARGET) else 1.0


@dataclass(frozen=True)
class Influx:
    """Global arrivals of `target` at `rate` agents/day (treatment events)."""

    name: str
    target: str
    rate: object

    def __post_init__(self):
        object.__setattr__(self, "rate", lift(self.rate))


def check_table(species, transitions, influxes):
    declared = set(species)
    for t in transitions:
        for s in {t.source, t.target} | species_used(t.rate):
            if s not in declared:
                raise UndeclaredSpecies(s, f"channel {t.name!r}")
    for f in influxes:
        for s in {f.target} | species_used(f.rate):
            if s not in declared:
                raise UndeclaredSpecies(s, f"influx {f.name!r}")


class EngineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = 0.01
    backend: Backend = Backend.TAU_LEAP
    rate_policy: RatePolicy = RatePolicy.LIVE
    max_rate_dt: float = 0.1
    sample_every: float = 1.0
    workers: int = 1

    @field_validator("dt", "sample_every")
    @classmethod
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("max_rate_dt")
    @classmethod
    def _unit_interval(cls, v):
        if not 0 < v < 1:
            raise ValueError("must be in (0, 1)")
        return v

    @field_validator("workers")
    @classmethod
    def _workers(cls, v):
        return max(1, int(v))

    @model_validator(mode="after")
    def _consistent(self):
        steps_between(self.sample_every, self.dt)
        if self.rate_policy is RatePolicy.FROZEN_AT_BIRTH and self.backend is not Backend.PER_AGENT:
            raise UsageError("frozen-at-birth rates need the per-agent backend")
        return self

    @property
    def steps_per_sample(self):
        return steps_between(self.sample_every, self.dt)


SPAWN, REMOVE_SELF, REMOVE_TARGET, SIGNED = range(4)
_KIND = {Effect.SPAWN: SPAWN, Effect.REMOVE_SELF: REMOVE_SELF, Effect.REMOVE_TARGET: REMOVE_TARGET, Effect.SIGNED: SIGNED}


@dataclass
class CompiledChannels:
    species: tuple
    names: tuple
    src: np.ndarray
    tgt: np.ndarray
    kind: np.ndarray
    rate_fns: list
    influx_names: tuple
    influx_tgt: np.ndarray
    influx_fns: list

    def __post_init__(self):
        self.spawnish = (self.kind == SPAWN) | (self.kind == SIGNED)
        self.removing = (self.kind == REMOVE_SELF) | (self.kind == REMOVE_TARGET) | (self.kind == SIGNED)
        self._src = self.src.tolist()

    def rates(self, counts):
        """Signed per-source rates for one state; channels whose source is extinct read 0 without evaluation."""
        y = [float(v) for v in counts]
        out = np.zeros(len(self.rate_fns))
        for c, fn in enumerate(self.rate_fns):
            if y[self._src[c]] > 0:
                try:
                    out[c] = fn(y)
                except ZeroDivisionError:
                    raise DivisionByZero(f"channel {self.names[c]}: division by zero at {self._at(y)}") from None
        return out

    def batch_rates(self, counts):
        """(R, C) signed rates for R states at once; extinct sources read 0."""
        counts = np.asarray(counts, dtype=float)
        cols = [counts[:, i] for i in range(counts.shape[1])]
        out = np.zeros((counts.shape[0], len(self.rate_fns)))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for c, fn in enumerate(self.rate_fns):
                has = cols[self._src[c]] > 0
                if has.any():
                    out[:, c] = np.where(has, fn(cols), 0.0)
        bad = ~np.isfinite(out)
        if bad.any():
            row, c = np.argwhere(bad)[0]
            raise DivisionByZero(f"channel {self.names[c]}: rate is not finite at {self._at(counts[row])}")
        return out

    def influx_rates(self, counts):
        y = [float(v) for v in counts]
        return np.array([fn(y) for fn in self.influx_fns], dtype=float)

    def batch_influx(self, counts):
        """(R, F) global arrival rates."""
        counts = np.asarray(counts, dtype=float)
        cols = [counts[:, i] for i in range(counts.shape[1])]
        out = np.zeros((counts.shape[0], len(self.influx_fns)))
        for f, fn in enumerate(self.influx_fns):
            out[:, f] = fn(cols)
        return out

    def _at(self, y):
        return ", ".join(f"{s}={v:g}" for s, v in zip(self.species, y))


def compile_channels(model):
    species = tuple(model.species)
    idx = {s: i for i, s in enumerate(species)}
    ts = model.transitions
    return CompiledChannels(
        species=species,
        names=tuple(t.name for t in ts),
        src=np.array([idx[t.source] for t in ts], dtype=np.int64),
        tgt=np.array([idx[t.target] for t in ts], dtype=np.int64),
        kind=np.array([_KIND[t.effect] for t in ts], dtype=np.int64),
        rate_fns=[compile_rate(t.rate, species, model.params) for t in ts],
        influx_names=tuple(f.name for f in model.influxes),
        influx_tgt=np.array([idx[f.target] for f in model.influxes], dtype=np.int64),
        influx_fns=[compile_rate(f.rate, species, model.params) for f in model.influxes],
    )
