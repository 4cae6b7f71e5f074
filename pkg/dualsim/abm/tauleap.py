# FILE: dualsim/abm/tauleap.py
# Count-level stepping. Agents of one species are exchangeable (every rate depends on
# totals only), so per-channel firing counts can be drawn directly. States are rows of an
# (R, k) matrix; row r only ever draws from its own generator.
import numpy as np

from .transitions import SIGNED


def apply_influx(counts, target, s, dt, rng):
    """Add Poisson(s*dt) arrivals of species index `target`. Works on a single state or a batch (..., k)."""
    out = np.array(counts, dtype=np.int64, copy=True)
    if s <= 0:
        return out
    out[..., target] += rng.poisson(s * dt, size=out.shape[:-1])
    return out


def draw_firings(lam, n_src, p, gens):
    """Poisson(lam) and Binomial(n_src, p) per row, each row from its own generator."""
    fired = np.empty(lam.shape, dtype=np.int64)
    removed = np.empty(n_src.shape, dtype=np.int64)
    for row, g in enumerate(gens):
        fired[row] = g.poisson(lam[row])
        removed[row] = g.binomial(n_src[row], p[row])
    return fired, removed


def step_batch(counts, chans, h, gens, rates=None):
    """One leap per row; row r has length h[r]. Returns (new counts, clamped removals per row).

    Spawn-type firings ~ Poisson(n_src * rate * h); removals ~ Binomial(n_src, 1 - exp(-rate*h)).
    Removals are applied first, channel by channel in declaration order, clamped at zero;
    spawns are added afterwards; influxes last.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if rates is None:
        rates = chans.batch_rates(counts)
    h = np.asarray(h, dtype=float).reshape(-1, 1)
    n_chan = len(chans.names)
    n_src = counts[:, chans.src]
    grow = np.where(chans.spawnish & ((chans.kind != SIGNED) | (rates > 0)), rates, 0.0)
    shrink = np.where(chans.removing & ((chans.kind != SIGNED) | (rates < 0)), np.abs(rates), 0.0)
    lam = n_src * grow * h
    if chans.influx_fns:
        lam = np.concatenate([lam, np.maximum(chans.batch_influx(counts), 0.0) * h], axis=1)
    fired, deaths = draw_firings(lam, n_src, -np.expm1(-shrink * h), gens)

    new = counts.copy()
    clamped = np.zeros(counts.shape[0], dtype=np.int64)
    for c in np.flatnonzero(deaths.any(axis=0)):
        t = chans.tgt[c]
        k = np.minimum(deaths[:, c], new[:, t])
        clamped += deaths[:, c] - k
        new[:, t] -= k
    for c in np.flatnonzero(fired[:, :n_chan].any(axis=0)):
        new[:, chans.tgt[c]] += fired[:, c]
    for f, t in enumerate(chans.influx_tgt):
        new[:, t] += fired[:, n_chan + f]
    return new, clamped


def step_tau_leap(counts, chans, dt, rng, rates=None):
    """One leap of length dt for a single state. Returns (new counts, number of clamped removals)."""
    rates = None if rates is None else np.asarray(rates, dtype=float)[None, :]
    new, clamped = step_batch(np.asarray(counts)[None, :], chans, [dt], [rng], rates)
    return new[0], int(clamped[0])


def peak_rates(rates):
    """Largest |rate| per row."""
    if rates.shape[1] == 0:
        return np.zeros(rates.shape[0])
    return np.abs(rates).max(axis=1)


def quiescent(chans, counts, rates):
    """Per row: True when nothing can ever fire again (no propensity, no influx)."""
    busy = (counts[:, chans.src] * np.abs(rates) > 0).any(axis=1)
    if chans.influx_fns:
        busy |= (chans.batch_influx(counts) > 0).any(axis=1)
    return ~busy
