# FILE: dualsim/pipeline/simulate.py
from ..abm import run_ensemble
from ..ode import integrate_adaptive, integrate_fixed
from ..schema import as_vector
from ..utils import log


def run_ode(config, model=None, adaptive=False, rel_tol=1e-6, abs_tol=1e-9):
    log.step("ode")
    model = model or config.build_model()
    y0 = as_vector(config.init, model.species)
    if adaptive:
        traj = integrate_adaptive(
            model.rhs, y0, config.horizon, rel_tol=rel_tol, abs_tol=abs_tol, sample_every=config.engine.sample_every
        )
    else:
        traj = integrate_fixed(model.rhs, y0, config.horizon, dt=config.engine.dt, sample_every=config.engine.sample_every)
    clamps = traj.meta["clamps"]
    if clamps:
        log.warn("ode: negative components clamped to 0", scenario=config.name, clamps=clamps)
    log.ok(samples=len(traj), scheme=traj.meta["scheme"], clamps=clamps)
    return traj


def run_abm(config, base_seed, model=None, n_reps=None):
    log.step("abm")
    model = model or config.build_model()
    n = n_reps or config.n_reps
    ens = run_ensemble(model, config.initial_state(), config.engine, n, base_seed, config.horizon)
    clamps = sum(r.meta["clamps"] for r in ens.replications)
    log.ok(reps=n, backend=config.engine.backend.value, seed=base_seed, clamps=clamps)
    return ens
