# FILE: dualsim/abm/engine.py
# CONTRACT: replication i is a pure function of (model, init, config, seed_i, t_end);
# tau-leap replications run as rows of one count matrix, each row on its own stream, so
# batching and the process pool never change the output
import math
from multiprocessing import Pool

import numpy as np

from ..errors import UsageError
from ..schema import Ensemble, Mode, Trajectory, as_vector, sample_grid
from ..utils import log
from ..utils.rng import SeededStream, replication_seeds
from .peragent import AgentPool, step_per_agent
from .tauleap import peak_rates, quiescent, step_batch
from .transitions import Backend, EngineConfig, RatePolicy, compile_channels


def substeps(peak_rate, dt, max_rate_dt):
    """Smallest k with peak_rate * dt / k <= max_rate_dt. Scalar in, int out; array in, array out."""
    load = np.asarray(peak_rate, dtype=float) * dt / max_rate_dt
    k = np.where(load <= 1.0 + 1e-12, 1.0, np.ceil(load - 1e-12)).astype(np.int64)
    return int(k) if k.ndim == 0 else k


def _run_tau_leap(chans, counts, grid, config, gens):
    n = len(gens)
    counts = np.tile(np.asarray(counts, dtype=np.int64), (n, 1))
    out = np.empty((n, grid.size, counts.shape[1]), dtype=np.int64)
    out[:, 0] = counts
    clamps = np.zeros(n, dtype=np.int64)
    subdivided = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)  # false once a row can never change again
    dt = config.dt
    for j in range(1, grid.size):
        for _ in range(config.steps_per_sample):
            rows = np.flatnonzero(active)
            if rows.size == 0:
                break
            rates = chans.batch_rates(counts[rows])
            done = quiescent(chans, counts[rows], rates)
            if done.any():
                active[rows[done]] = False
                rows, rates = rows[~done], rates[~done]
                if rows.size == 0:
                    break
            ks = substeps(peak_rates(rates), dt, config.max_rate_dt)
            subdivided[rows] += ks > 1
            for i in range(int(ks.max())):
                sel = ks > i
                at = rows[sel]
                new, c = step_batch(counts[at], chans, dt / ks[sel], [gens[r] for r in at], rates[sel] if i == 0 else None)
                counts[at] = new
                clamps[at] += c
        out[:, j] = counts
    return out, clamps, subdivided


def _run_per_agent(chans, counts, grid, config, rng):
    pool = AgentPool.from_counts(counts, chans, frozen=config.rate_policy is RatePolicy.FROZEN_AT_BIRTH)
    out = np.empty((grid.size, counts.size), dtype=np.int64)
    out[0] = counts
    dropped = subdivided = 0
    dt = config.dt
    t = 0.0
    for j in range(1, grid.size):
        for _ in range(config.steps_per_sample):
            now = pool.counts()
            live = chans.rates(now)
            k = substeps(pool.max_abs_rate(live), dt, config.max_rate_dt)
            if k > 1:
                subdivided += 1
            h = dt / k
            for i in range(k):
                pool, d = step_per_agent(pool, chans, h, rng, t, live if i == 0 else None)
                dropped += d
                t += h
        out[j] = pool.counts()
    return out, dropped, subdivided


def _meta(config, seed, clamps, subdivided):
    return {
        "seed": seed,
        "clamps": int(clamps),
        "subdivided_steps": int(subdivided),
        "backend": config.backend.value,
        "rate_policy": config.rate_policy.value,
        "dt": config.dt,
    }


def _run_streams(model, init, config, streams, t_end):
    """Trajectories for several streams of one model; tau-leap runs them as one batch."""
    chans = compile_channels(model)
    counts = as_vector(init, model.species, dtype=np.int64)
    grid = sample_grid(t_end, config.sample_every)
    if config.backend is Backend.PER_AGENT:
        out = []
        for s in streams:
            values, clamps, subdivided = _run_per_agent(chans, counts, grid, config, s.generator)
            out.append(Trajectory(model.species, grid, values, Mode.ABM, _meta(config, s.seed, clamps, subdivided)))
        return out
    values, clamps, subdivided = _run_tau_leap(chans, counts, grid, config, [s.generator for s in streams])
    return [
        Trajectory(model.species, grid, values[r], Mode.ABM, _meta(config, s.seed, clamps[r], subdivided[r]))
        for r, s in enumerate(streams)
    ]


def run_replication(model, init, config=None, stream=None, t_end=100.0):
    """One stochastic run on the daily (sample_every) grid over [0, t_end]."""
    config = config or EngineConfig()
    stream = stream if stream is not None else SeededStream(0)
    return _run_streams(model, init, config, [stream], t_end)[0]


def _replicate_block(job):
    # module level so the pool can pickle it; channels are compiled inside the worker
    model, init, config, seeds, t_end = job
    return _run_streams(model, init, config, [SeededStream(s) for s in seeds], t_end)


def _blocks(seeds, n):
    size = math.ceil(len(seeds) / n)
    return [seeds[i : i + size] for i in range(0, len(seeds), size)]


def run_ensemble(model, init, config=None, n_reps=50, base_seed=0, t_end=100.0):
    """n_reps replications seeded base_seed + i, plus their pointwise mean."""
    config = config or EngineConfig()
    if n_reps < 1:
        raise UsageError("n_reps must be >= 1")
    seeds = replication_seeds(base_seed, n_reps)
    workers = min(config.workers, n_reps)
    jobs = [(model, init, config, block, t_end) for block in _blocks(seeds, workers)]
    if workers > 1:
        with Pool(processes=workers) as pool:
            done = pool.map(_replicate_block, jobs)
    else:
        done = [_replicate_block(j) for j in jobs]
    reps = [r for block in done for r in block]
    clamps = sum(r.meta["clamps"] for r in reps)
    if clamps:
        log.warn("abm: clamped removals", model=model.name, clamps=clamps)
    return Ensemble.from_replications(reps, seeds)
