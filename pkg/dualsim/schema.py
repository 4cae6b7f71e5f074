# FILE: dualsim/schema.py
# CONTRACT: value types shared by the ODE and agent paradigms; immutable once built
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

import numpy as np

from .errors import NegativeState, UsageError

TUMOUR = "Tumour"
EFFECTOR = "Effector"
IL2 = "IL2"
TGF_BETA = "TGFBeta"

SpeciesId = str


class Mode(str, Enum):
    ODE = "ODE"
    ABM = "ABM"
    ABM_MEAN = "ABM-mean"


def check_species(species):
    species = tuple(species)
    if len(set(species)) != len(species):
        raise UsageError(f"duplicate species in {species}")
    return species


@dataclass(frozen=True)
class PopulationState:
    time: float
    values: Mapping[str, float]

    def __post_init__(self):
        vals = dict(self.values)
        for k, v in vals.items():
            if v < 0:
                raise NegativeState(k, v)
        object.__setattr__(self, "values", vals)

    @property
    def integral(self):
        return all(float(v).is_integer() for v in self.values.values())

    def vector(self, species, dtype=float):
        return as_vector(self.values, species, dtype=dtype)

    def __getitem__(self, name):
        return self.values[name]


def as_vector(state, species, dtype=float):
    """Species-ordered array from a mapping, PopulationState or sequence. Missing species read as 0."""
    if isinstance(state, PopulationState):
        state = state.values
    if isinstance(state, Mapping):
        unknown = set(state) - set(species)
        if unknown:
            raise UsageError(f"unknown species {sorted(unknown)}; model has {list(species)}")
        y = np.array([state.get(s, 0) for s in species], dtype=float)
    else:
        y = np.asarray(state, dtype=float)
        if y.shape != (len(species),):
            raise UsageError(f"state has shape {y.shape}, expected ({len(species)},)")
    for s, v in zip(species, y):
        if v < 0:
            raise NegativeState(s, v)
    if np.dtype(dtype).kind in "iu":
        if not np.all(np.mod(y, 1.0) == 0):
            raise UsageError("agent populations must be whole numbers")
        return y.astype(np.int64)
    return y


def sample_grid(t_end, sample_every):
    """0, h, 2h, ... up to t_end. Built by multiplication so every engine returns the same floats."""
    if t_end <= 0 or sample_every <= 0:
        raise UsageError("t_end and sample_every must be > 0")
    n = int(np.floor(t_end / sample_every + 1e-9))
    return np.arange(n + 1, dtype=float) * sample_every


def steps_between(sample_every, dt):
    k = sample_every / dt
    n = int(round(k))
    if n < 1 or abs(k - n) > 1e-9 * max(1.0, k):
        raise UsageError(f"sample_every={sample_every} is not an integer multiple of dt={dt}")
    return n


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    species: tuple
    times: np.ndarray
    values: np.ndarray  # (len(times), len(species))
    mode: Mode
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        species = check_species(self.species)
        times = _frozen(np.asarray(self.times, dtype=float))
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape != (times.size, len(species)):
            raise UsageError(f"values shape {values.shape} does not match {times.size} samples x {len(species)} species")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise UsageError("sample times must be strictly increasing")
        if self.mode is Mode.ABM:
            values = values.astype(np.int64)
        else:
            values = values.astype(float)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self):
        return self.times.size

    def series(self, name):
        try:
            return self.values[:, self.species.index(name)]
        except ValueError:
            raise UsageError(f"no species {name!r} in trajectory ({', '.join(self.species)})") from None

    def state_at(self, i):
        return PopulationState(float(self.times[i]), dict(zip(self.species, self.values[i].tolist())))

    @property
    def final(self):
        return self.state_at(-1)

    def same_grid(self, other):
        return self.species == other.species and np.array_equal(self.times, other.times)


@dataclass(frozen=True)
class Ensemble:
    replications: tuple
    mean: Trajectory
    seeds: tuple
    n_reps: Optional[int] = None

    def __post_init__(self):
        if self.n_reps is None:
            object.__setattr__(self, "n_reps", len(self.replications))

    @classmethod
    def from_replications(cls, reps, seeds=None):
        reps = tuple(reps)
        if not reps:
            raise UsageError("an ensemble needs at least one replication")
        first = reps[0]
        for r in reps[1:]:
            if not r.same_grid(first):
                raise UsageError("replications do not share one sample grid")
        stack = np.stack([r.values for r in reps])
        # integer counts: float64 sums are exact, so the mean does not depend on replication order
        mean = Trajectory(
            first.species,
            first.times,
            stack.mean(axis=0, dtype=float),
            Mode.ABM_MEAN,
            {"n_reps": len(reps)},
        )
        seeds = tuple(seeds) if seeds is not None else tuple(r.meta.get("seed") for r in reps)
        return cls(reps, mean, seeds)

    def trimmed(self, keep):
        """Same mean, at most `keep` per-replication trajectories."""
        return Ensemble(self.replications[:keep], self.mean, self.seeds[:keep], self.n_reps)

    def endpoints(self, name):
        return np.array([r.series(name)[-1] for r in self.replications])
