# FILE: dualsim/abm/peragent.py
# Individual agents. Each agent keeps its birth time; under the frozen-at-birth policy it
# also keeps the channel rates evaluated at the state it was born into.
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tauleap import apply_influx
from .transitions import REMOVE_SELF, REMOVE_TARGET, SIGNED, SPAWN


@dataclass
class AgentPool:
    """Alive agents per species (species order of the compiled channels)."""

    species: tuple
    births: list  # one float array per species
    frozen: Optional[list] = None  # one (n_agents, n_channels) array per species, or None for live rates

    @classmethod
    def from_counts(cls, counts, chans, t=0.0, frozen=False):
        counts = np.asarray(counts, dtype=np.int64)
        births = [np.full(int(n), float(t)) for n in counts]
        rates = None
        if frozen:
            r = chans.rates(counts)
            rates = [np.tile(r, (int(n), 1)) for n in counts]
        return cls(tuple(chans.species), births, rates)

    def counts(self):
        return np.array([b.size for b in self.births], dtype=np.int64)

    @property
    def is_frozen(self):
        return self.frozen is not None

    def max_abs_rate(self, live_rates):
        if not self.is_frozen:
            return float(np.abs(live_rates).max()) if live_rates.size else 0.0
        peak = 0.0
        for f in self.frozen:
            if f.size:
                peak = max(peak, float(np.abs(f).max()))
        return peak

    def agent_rates(self, c, s, live_rates):
        """Rate of channel c for every alive agent of species s (live: one shared value)."""
        if self.is_frozen:
            return self.frozen[s][:, c]
        return np.full(self.births[s].size, live_rates[c])


def step_per_agent(pool, chans, dt, rng, t=0.0, live_rates=None):
    """Advance every agent by dt. Returns (new pool, number of dropped messages).

    Channels run in declaration order. Each alive agent fires a channel with probability
    1 - exp(-|rate| dt); an agent removed earlier in the step fires nothing afterwards.
    Newborns join at t + dt and do not act until the next step.
    """
    counts = pool.counts()
    if live_rates is None:
        live_rates = chans.rates(counts)
    alive = [np.ones(b.size, dtype=bool) for b in pool.births]
    born = np.zeros(len(pool.species), dtype=np.int64)
    dropped = 0

    for c in range(len(chans.names)):
        s, tgt, kind = int(chans.src[c]), int(chans.tgt[c]), int(chans.kind[c])
        idx = np.flatnonzero(alive[s])
        if idx.size == 0:
            continue
        r = pool.agent_rates(c, s, live_rates)[idx]
        fired = rng.random(idx.size) < -np.expm1(-np.abs(r) * dt)
        if not fired.any():
            continue
        if kind == SPAWN:
            born[tgt] += int(fired.sum())
        elif kind == REMOVE_SELF:
            alive[s][idx[fired]] = False
        elif kind == SIGNED:
            born[s] += int((fired & (r > 0)).sum())
            alive[s][idx[fired & (r < 0)]] = False
        elif kind == REMOVE_TARGET:
            k = int(fired.sum())
            targets = np.flatnonzero(alive[tgt])
            hit = min(k, targets.size)
            dropped += k - hit
            if hit:
                alive[tgt][rng.choice(targets, size=hit, replace=False)] = False

    if chans.influx_fns:
        for f, s_rate in zip(chans.influx_tgt, chans.influx_rates(counts)):
            born = apply_influx(born, f, s_rate, dt, rng)

    births = [np.concatenate([b[a], np.full(int(n), t + dt)]) for b, a, n in zip(pool.births, alive, born)]
    frozen = None
    if pool.is_frozen:
        after = np.array([b.size for b in births], dtype=np.int64)
        newborn_rates = chans.rates(after)
        frozen = [
            np.concatenate([f[a], np.tile(newborn_rates, (int(n), 1))]) for f, a, n in zip(pool.frozen, alive, born)
        ]
    return AgentPool(pool.species, births, frozen), dropped
