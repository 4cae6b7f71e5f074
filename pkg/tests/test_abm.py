import math
import pickle

import numpy as np
import pytest
from scipy.stats import ks_2samp

from dualsim.abm import (
    AgentPool,
    Backend,
    EngineConfig,
    RatePolicy,
    apply_influx,
    compile_channels,
    run_ensemble,
    run_replication,
    step_per_agent,
    step_tau_leap,
    substeps,
)
from dualsim.errors import DivisionByZero, UsageError
from dualsim.models import CustomModel, build_case1
from dualsim.schema import Ensemble, Mode, sample_grid
from dualsim.utils.rng import SeededStream


def _model(species, transitions, params=None, influxes=()):
    return CustomModel(
        species=species, params=params or {}, transitions=list(transitions), influxes=list(influxes)
    ).build()


def _death(rate):
    return _model(["A"], [{"name": "die", "source": "A", "rate": "r", "effect": "remove-self"}], {"r": rate})


def test_zero_rates_leave_state_unchanged():
    chans = compile_channels(_death(0.0))
    new, clamped = step_tau_leap(np.array([5]), chans, 0.01, np.random.default_rng(0))
    assert new.tolist() == [5] and clamped == 0


def test_huge_removal_clamps_at_zero():
    chans = compile_channels(_death(1e6))
    new, _ = step_tau_leap(np.array([3]), chans, 1.0, np.random.default_rng(0))
    assert new.tolist() == [0]


def test_removal_of_other_species_is_clamped_and_counted():
    model = _model(
        ["A", "B"], [{"name": "hit", "source": "A", "rate": "r", "effect": "remove-target", "target": "B"}], {"r": 1e6}
    )
    new, clamped = step_tau_leap(np.array([3, 2]), compile_channels(model), 1.0, np.random.default_rng(0))
    assert new.tolist() == [3, 0]
    assert clamped == 1


def test_tau_leap_drift_matches_ode():
    model = build_case1(1)
    chans = compile_channels(model)
    rng = np.random.default_rng(7)
    counts = np.array([100, 2])
    rates = chans.rates(counts)
    dt = 0.001
    n = 20_000
    dT = np.array([step_tau_leap(counts, chans, dt, rng, rates)[0][0] - 100 for _ in range(n)]) / dt
    se = dT.std(ddof=1) / math.sqrt(n)
    assert abs(dT.mean() - (-69.12)) < 3 * se


@pytest.mark.parametrize("s,dt,expected", [(0.318, 0.01, 31.8), (0.1181, 0.1, 11.81)])
def test_influx_total_over_100_days(s, dt, expected):
    rng = np.random.default_rng(1)
    reps = 10_000
    counts = np.zeros((reps, 1), dtype=np.int64)
    for _ in range(int(round(100 / dt))):
        counts = apply_influx(counts, 0, s, dt, rng)
    mean = counts[:, 0].mean()
    assert abs(mean - expected) < 3 * math.sqrt(expected / reps)


def test_zero_influx_adds_nothing():
    out = apply_influx(np.array([4, 0]), 1, 0.0, 1.0, np.random.default_rng(0))
    assert out.tolist() == [4, 0]


def test_per_agent_survival_probability():
    r, dt, steps = 1.0, 0.1, 5
    chans = compile_channels(_death(r))
    pool = AgentPool.from_counts([10_000], chans)
    rng = np.random.default_rng(5)
    for k in range(steps):
        pool, _ = step_per_agent(pool, chans, dt, rng, t=k * dt)
    p = math.exp(-r * steps * dt)
    frac = pool.counts()[0] / 10_000
    assert abs(frac - p) < 3 * math.sqrt(p * (1 - p) / 10_000)


def test_message_without_targets_is_dropped():
    model = _model(
        ["A", "B"], [{"name": "hit", "source": "A", "rate": "r", "effect": "remove-target", "target": "B"}], {"r": 1e6}
    )
    chans = compile_channels(model)
    pool = AgentPool.from_counts([1, 0], chans)
    pool, dropped = step_per_agent(pool, chans, 1.0, np.random.default_rng(0))
    assert dropped == 1
    assert pool.counts().tolist() == [1, 0]


def test_newborns_carry_birth_time():
    model = _model(["A"], [{"name": "split", "source": "A", "rate": "r", "effect": "spawn", "target": "A"}], {"r": 1e6})
    chans = compile_channels(model)
    pool = AgentPool.from_counts([2], chans)
    pool, _ = step_per_agent(pool, chans, 0.5, np.random.default_rng(0), t=1.0)
    assert pool.counts().tolist() == [4]
    assert sorted(pool.births[0].tolist()) == [0.0, 0.0, 1.5, 1.5]


def test_frozen_and_live_agree_for_constant_rates():
    model = _model(
        ["A"],
        [
            {"name": "split", "source": "A", "rate": "b", "effect": "spawn", "target": "A"},
            {"name": "die", "source": "A", "rate": "d", "effect": "remove-self"},
        ],
        {"b": 0.3, "d": 0.2},
    )
    live = EngineConfig(backend=Backend.PER_AGENT, rate_policy=RatePolicy.LIVE)
    frozen = EngineConfig(backend=Backend.PER_AGENT, rate_policy=RatePolicy.FROZEN_AT_BIRTH)
    a = run_replication(model, {"A": 20}, live, SeededStream(3), t_end=10)
    b = run_replication(model, {"A": 20}, frozen, SeededStream(3), t_end=10)
    assert np.array_equal(a.values, b.values)


def test_replication_is_deterministic_and_on_grid():
    model = build_case1(1)
    a = run_replication(model, {"Tumour": 100, "Effector": 5}, stream=SeededStream(42), t_end=10)
    b = run_replication(model, {"Tumour": 100, "Effector": 5}, stream=SeededStream(42), t_end=10)
    assert a.mode is Mode.ABM
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.times, sample_grid(10, 1.0))
    assert a.meta["seed"] == 42
    assert (a.values >= 0).all()


def test_empty_population_without_influx_stays_empty():
    traj = run_replication(_death(0.5), {"A": 0}, t_end=5)
    assert traj.values.sum() == 0


def test_ensemble_of_one_is_its_replication():
    model = build_case1(2)
    init = {"Tumour": 100, "Effector": 5}
    ens = run_ensemble(model, init, n_reps=1, base_seed=9, t_end=5)
    rep = run_replication(model, init, stream=SeededStream(9), t_end=5)
    assert np.array_equal(ens.mean.values, rep.values.astype(float))
    assert ens.seeds == (9,)


def test_ensemble_mean_ignores_replication_order():
    model = build_case1(1)
    ens = run_ensemble(model, {"Tumour": 100, "Effector": 5}, n_reps=6, base_seed=1, t_end=5)
    flipped = Ensemble.from_replications(reversed(ens.replications))
    assert np.array_equal(ens.mean.values, flipped.mean.values)


def test_ensemble_is_identical_with_worker_processes():
    model = build_case1(1)
    init = {"Tumour": 100, "Effector": 5}
    serial = run_ensemble(model, init, EngineConfig(workers=1), n_reps=4, base_seed=3, t_end=5)
    pooled = run_ensemble(model, init, EngineConfig(workers=2), n_reps=4, base_seed=3, t_end=5)
    assert np.array_equal(serial.mean.values, pooled.mean.values)
    assert serial.seeds == pooled.seeds == (3, 4, 5, 6)


def test_ensemble_rows_match_single_replications():
    model = build_case1(2)
    init = {"Tumour": 100, "Effector": 5}
    ens = run_ensemble(model, init, EngineConfig(workers=1), n_reps=5, base_seed=20, t_end=5)
    for i, rep in enumerate(ens.replications):
        alone = run_replication(model, init, stream=SeededStream(20 + i), t_end=5)
        assert np.array_equal(rep.values, alone.values)
        assert rep.meta == alone.meta


def test_trajectories_survive_pickling():
    traj = run_replication(build_case1(1), {"Tumour": 100, "Effector": 5}, stream=SeededStream(4), t_end=3)
    back = pickle.loads(pickle.dumps(traj))
    assert np.array_equal(back.values, traj.values)
    assert back.meta == traj.meta


def _immigration_death(p, mu):
    return _model(
        ["X"],
        [{"name": "clear", "source": "X", "rate": "mu", "effect": "remove-self"}],
        {"p": p, "mu": mu},
        [{"name": "supply", "target": "X", "rate": "p"}],
    )


@pytest.mark.parametrize("guard,low,high", [(0.01, 98.0, 103.0), (0.1, 103.0, 108.0)])
def test_fast_clearance_plateau_depends_on_guard(guard, low, high):
    # stationary mean is p/mu = 100; one leap per 0.01 day overshoots it by about 5%
    model = _immigration_death(1000.0, 10.0)
    ens = run_ensemble(model, {"X": 100}, EngineConfig(max_rate_dt=guard), n_reps=100, base_seed=0, t_end=5)
    level = np.stack([r.series("X")[1:] for r in ens.replications]).mean()
    assert low < level < high


def test_non_finite_rate_is_reported():
    model = _model(
        ["A", "B"], [{"name": "split", "source": "A", "rate": "1/B", "effect": "spawn", "target": "A"}]
    )
    with pytest.raises(DivisionByZero):
        run_replication(model, {"A": 3, "B": 0}, t_end=1)
    with pytest.raises(DivisionByZero):
        compile_channels(model).rates(np.array([3, 0]))


def test_ensemble_needs_replications():
    with pytest.raises(UsageError):
        run_ensemble(build_case1(1), {"Tumour": 1}, n_reps=0)


def test_substeps():
    assert substeps(10, 0.01, 0.1) == 1
    assert substeps(25, 0.01, 0.1) == 3
    assert substeps(100, 0.01, 0.1) == 10
    assert substeps(0, 0.01, 0.1) == 1
    assert substeps(np.array([10.0, 25.0, 100.0, 0.0]), 0.01, 0.1).tolist() == [1, 3, 10, 1]


def test_engine_config_rules():
    with pytest.raises(UsageError):
        EngineConfig(rate_policy=RatePolicy.FROZEN_AT_BIRTH)
    with pytest.raises(UsageError):
        EngineConfig(dt=0.3)
    with pytest.raises(ValueError):
        EngineConfig(dt=0)
    with pytest.raises(ValueError):
        EngineConfig(max_rate_dt=1.0)
    assert EngineConfig().steps_per_sample == 100


def test_fast_rates_are_subdivided():
    model = _death(50.0)
    traj = run_replication(model, {"A": 1000}, EngineConfig(dt=0.01), t_end=1)
    assert traj.meta["subdivided_steps"] > 0


@pytest.mark.slow
def test_backends_agree_in_distribution():
    model = build_case1(1)
    init = {"Tumour": 100, "Effector": 5}
    tau = run_ensemble(model, init, EngineConfig(), n_reps=200, base_seed=0, t_end=10)
    agent = run_ensemble(model, init, EngineConfig(backend=Backend.PER_AGENT), n_reps=200, base_seed=1000, t_end=10)
    assert ks_2samp(tau.endpoints("Tumour"), agent.endpoints("Tumour")).pvalue > 0.01


@pytest.mark.slow
def test_case1_scenario1_agents_go_extinct():
    ens = run_ensemble(build_case1(1), {"Tumour": 100, "Effector": 5}, n_reps=50, base_seed=0, t_end=100)
    extinct = sum(1 for r in ens.replications if r.series("Tumour")[100] == 0)
    assert extinct >= 25
