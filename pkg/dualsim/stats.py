# FILE: dualsim/stats.py
# CONTRACT: rank-sum comparison of ODE vs agent outputs and extreme-outcome counting;
# everything here is a pure function of its inputs
import math
import re
from collections import namedtuple
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.stats import norm, rankdata, tiecorrect

from .errors import EmptySample, GridMismatch, NoSuchSeries, UsageError
from .schema import EFFECTOR, IL2, TGF_BETA, TUMOUR
from .utils.text import suggest

EXACT_MAX_N = 20
ALTERNATIVES = ("two-sided", "less", "greater")
PAIRINGS = ("daily-mean", "endpoint")

RankSumResult = namedtuple("RankSumResult", ("statistic", "pvalue"))


@lru_cache(maxsize=None)
def u_counts(n1, n2):
    """Number of rank assignments giving each U = 0..n1*n2 (no ties)."""
    if n1 == 0 or n2 == 0:
        return (1,)
    # the largest pooled value is either the last x (beats all n2 y's) or the last y
    with_x = u_counts(n1 - 1, n2)
    with_y = u_counts(n1, n2 - 1)
    out = [0] * (n1 * n2 + 1)
    for u, c in enumerate(with_x):
        out[u + n2] += c
    for u, c in enumerate(with_y):
        out[u] += c
    return tuple(out)


def _exact_p(u, n1, n2, alternative):
    counts = u_counts(n1, n2)
    total = math.comb(n1 + n2, n1)
    lo = sum(counts[: u + 1])
    hi = sum(counts[u:])
    if alternative == "less":
        return lo / total
    if alternative == "greater":
        return hi / total
    return min(1.0, 2 * min(lo, hi) / total)


def _normal_p(u, n1, n2, ranks, alternative):
    n = n1 + n2
    sd = math.sqrt(tiecorrect(ranks) * n1 * n2 * (n + 1) / 12.0)
    if sd == 0:
        return 1.0
    mu = n1 * n2 / 2.0
    if alternative == "less":
        return float(norm.cdf((u - mu + 0.5) / sd))
    if alternative == "greater":
        return float(norm.sf((u - mu - 0.5) / sd))
    z = max(abs(u - mu) - 0.5, 0.0) / sd
    return min(1.0, float(2.0 * norm.sf(z)))


def wilcoxon_rank_sum(x, y, alternative="two-sided", method="auto"):
    """Mann-Whitney U of `x` (midranks for ties) and its p-value.

    method="auto" enumerates the exact null distribution when len(x)+len(y) <= 20 and
    there are no ties, otherwise uses the tie-corrected normal approximation with a
    continuity correction. "less" means x tends to be smaller than y.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size == 0 or y.size == 0:
        raise EmptySample(f"rank-sum needs two non-empty samples, got sizes {x.size} and {y.size}")
    if alternative not in ALTERNATIVES:
        raise UsageError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    n1, n2 = x.size, y.size
    ranks = rankdata(np.concatenate([x, y]))
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    ties = np.unique(ranks).size < ranks.size
    if method == "auto":
        method = "exact" if (n1 + n2 <= EXACT_MAX_N and not ties) else "asymptotic"
    if method == "exact":
        if ties:
            raise UsageError("exact rank-sum p-values need samples without ties")
        p = _exact_p(int(round(u)), n1, n2, alternative)
    elif method == "asymptotic":
        p = _normal_p(u, n1, n2, ranks, alternative)
    else:
        raise UsageError(f"method must be auto, exact or asymptotic, got {method!r}")
    return RankSumResult(u, p)


# comparison reports


@dataclass(frozen=True)
class SpeciesComparison:
    species: str
    statistic: float
    pvalue: float
    n_x: int
    n_y: int
    alpha: float

    @property
    def reject(self):
        return self.pvalue < self.alpha

    @property
    def decision(self):
        return "reject" if self.reject else "fail to reject"


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple
    alpha: float = 0.05
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "meta", dict(self.meta))

    def __iter__(self):
        return iter(self.rows)

    def row(self, species):
        for r in self.rows:
            if r.species == species:
                return r
        raise NoSuchSeries(species, [r.species for r in self.rows])

    @property
    def rejected(self):
        return [r.species for r in self.rows if r.reject]

    @property
    def summary(self):
        n = len(self.rows)
        k = len(self.rejected)
        if k:
            return f"reject ({k}/{n} species)"
        return f"fail to reject ({n}/{n} species)"


def compare_trajectories(ode, abm_mean, alpha=0.05, pairing="daily-mean", ensemble=None, meta=None):
    """Per-species rank-sum of the ODE run against the agent side.

    daily-mean: the sampled ODE series vs the sampled ensemble-mean series, as two samples.
    endpoint: the ODE final value (repeated once per replication) vs per-replication final values.
    """
    if not 0 < alpha < 1:
        raise UsageError(f"alpha must be in (0, 1), got {alpha!r}")
    if pairing not in PAIRINGS:
        raise UsageError(f"pairing must be one of {PAIRINGS}, got {pairing!r}")
    if not ode.same_grid(abm_mean):
        raise GridMismatch(
            f"ODE grid ({len(ode)} samples, {', '.join(ode.species)}) does not match "
            f"agent grid ({len(abm_mean)} samples, {', '.join(abm_mean.species)})"
        )
    rows = []
    for s in ode.species:
        if pairing == "endpoint":
            if ensemble is None:
                raise UsageError("endpoint pairing needs the ensemble")
            y = ensemble.endpoints(s)
            x = np.full(y.size, ode.series(s)[-1])
        else:
            x, y = ode.series(s), abm_mean.series(s)
        res = wilcoxon_rank_sum(x, y)
        rows.append(SpeciesComparison(s, res.statistic, res.pvalue, len(x), len(y), alpha))
    info = {"pairing": pairing}
    info.update(meta or {})
    return ComparisonReport(rows, alpha, info)


# extreme-case census


def _series(traj, species):
    if species not in traj.species:
        raise NoSuchSeries(species, traj.species)
    return traj.series(species)


@dataclass(frozen=True)
class ExtinctBy:
    """Population is exactly 0 at some sample time <= `by`."""

    species: str
    by: float

    @property
    def name(self):
        return f"{_SLUG.get(self.species, self.species.lower())}-extinct-by({_num(self.by)})"

    def __call__(self, traj):
        values = _series(traj, self.species)[traj.times <= self.by + 1e-9]
        return bool(np.any(values == 0))


@dataclass(frozen=True)
class MaxBelow:
    """Population never reaches `bound` over the whole run."""

    species: str
    bound: float

    @property
    def name(self):
        return f"species-max-below({self.species},{_num(self.bound)})"

    def __call__(self, traj):
        return bool(np.max(_series(traj, self.species)) < self.bound)


def _num(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


_SLUG = {TUMOUR: "tumour", EFFECTOR: "effector", IL2: "il2", TGF_BETA: "tgfbeta"}
_ALIASES = {"tumour": TUMOUR, "tumor": TUMOUR, "effector": EFFECTOR, "il2": IL2, "tgfbeta": TGF_BETA}
_EXTINCT = re.compile(r"^\s*([A-Za-z0-9_]+)-extinct-by\(\s*([^)]+?)\s*\)\s*$")
_MAX_BELOW = re.compile(r"^\s*species-max-below\(\s*([A-Za-z0-9_]+)\s*,\s*([^)]+?)\s*\)\s*$")


def _species_name(token, species):
    if token in species:
        return token
    canon = _ALIASES.get(token.lower()) or next((s for s in species if s.lower() == token.lower()), None)
    if canon and (not species or canon in species):
        return canon
    if not species:
        return token
    raise NoSuchSeries(token, species)


def parse_predicate(text, species=()):
    """'tumour-extinct-by(200)', 'effector-extinct-by(50)', 'species-max-below(TGFBeta,3)'."""
    m = _EXTINCT.match(text)
    try:
        if m:
            return ExtinctBy(_species_name(m.group(1), species), float(m.group(2)))
        m = _MAX_BELOW.match(text)
        if m:
            return MaxBelow(_species_name(m.group(1), species), float(m.group(2)))
    except ValueError:
        raise UsageError(f"bad number in predicate {text!r}") from None
    known = ["tumour-extinct-by(t)", "effector-extinct-by(t)", "species-max-below(species,v)"]
    hint = suggest(text.split("(")[0], [k.split("(")[0] for k in known])
    raise UsageError(f"unknown predicate {text!r}" + (f" (did you mean {hint}(...)?)" if hint else ""))


@dataclass(frozen=True)
class CensusRow:
    name: str
    count: int
    total: int

    @property
    def frequency(self):
        return self.count / self.total


def extreme_case_census(ensemble, predicates):
    """How many replications satisfy each predicate."""
    reps = ensemble.replications
    if not reps:
        raise EmptySample("census needs at least one replication")
    preds = [parse_predicate(p, reps[0].species) if isinstance(p, str) else p for p in predicates]
    return [CensusRow(p.name, sum(1 for r in reps if p(r)), len(reps)) for p in preds]


def default_predicates(species, extinct_by=200.0, tgf_max_below=3.0):
    out = []
    if TUMOUR in species:
        out.append(ExtinctBy(TUMOUR, extinct_by))
    if EFFECTOR in species:
        out.append(ExtinctBy(EFFECTOR, extinct_by))
    if TGF_BETA in species:
        out.append(MaxBelow(TGF_BETA, tgf_max_below))
    return out
