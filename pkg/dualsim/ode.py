# FILE: dualsim/ode.py
# CONTRACT: right-hand sides of the four models + deterministic integration on a sample grid
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NonFiniteState, StepUnderflow, UsageError
from .schema import EFFECTOR, IL2, TGF_BETA, TUMOUR, Mode, Trajectory, as_vector, sample_grid, steps_between
from .utils import log

CASE0_SPECIES = (TUMOUR,)
CASE1_SPECIES = (TUMOUR, EFFECTOR)
CASE2_SPECIES = (TUMOUR, EFFECTOR, IL2)
CASE3_SPECIES = (TUMOUR, EFFECTOR, IL2, TGF_BETA)


@dataclass(frozen=True)
class RhsFunction:
    """(t, y) -> dy/dt for a species-ordered state vector, with parameters bound."""

    species: tuple
    func: Callable[[float, np.ndarray, Any], np.ndarray]
    params: Any = None

    @property
    def arity(self):
        return len(self.species)

    def __call__(self, t, y):
        return self.func(t, y, self.params)


# kernels: no state checks, safe on the slightly negative RK stage values


def case0_derivs(t, y, p):
    T = y[0]
    return np.array([p.a * T**p.alpha - p.b * T**p.beta]) if T > 0 else np.zeros(1)


def case1_derivs(t, y, p):
    T, E = y
    dT = p.a * T * (1.0 - p.b * T) - p.n * T * E
    dE = p.p * T * E / (p.g + T) - p.m * T * E - p.d * E + p.s
    return np.array([dT, dE])


def case2_derivs(t, y, p):
    T, E, I = y
    dT = p.a * T * (1.0 - p.b * T) - p.aa * E * T / (p.g2 + T)
    dE = p.c * T - p.mu2 * E + p.p1 * E * I / (p.g1 + I) + p.s1
    dI = p.p2 * E * T / (p.g3 + T) - p.mu3 * I + p.s2
    return np.array([dT, dE, dI])


def tgf_net_proliferation(S, I, p):
    """Per-effector net proliferation under TGF-beta: (p1 - q1*S/(q2+S)) * I/(g1+I).

    Reconstructed from the model description; the only place this form lives
    on the ODE side (the agent side mirrors it in models._case3_proliferation).
    """
    return (p.p1 - p.q1 * S / (p.q2 + S)) * I / (p.g1 + I)


def case3_derivs(t, y, p):
    T, E, I, S = y
    dE = p.c * T / (1.0 + p.gamma * S) - p.mu1 * E + tgf_net_proliferation(S, I, p) * E
    dT = p.a * T * (1.0 - T / p.K) - p.aa * E * T / (p.g2 + T) + p.p2 * S * T / (p.g3 + S)
    dI = p.p3 * E * T / ((p.g4 + T) * (1.0 + p.alpha * S)) - p.mu2 * I
    dS = p.p4 * T * T / (p.theta * p.theta + T * T) - p.mu3 * S
    return np.array([dT, dE, dI, dS])


def _checked(kernel, species, state, params):
    y = as_vector(state, species)
    return kernel(0.0, y, params)


def rhs_case0(state, params):
    return _checked(case0_derivs, CASE0_SPECIES, state, params)


def rhs_case1(state, params):
    return _checked(case1_derivs, CASE1_SPECIES, state, params)


def rhs_case2(state, params):
    return _checked(case2_derivs, CASE2_SPECIES, state, params)


def rhs_case3(state, params):
    return _checked(case3_derivs, CASE3_SPECIES, state, params)


# integrators


def integrate_fixed(rhs, y0, t_end, dt=0.01, sample_every=1.0):
    """Classic RK4 on a uniform grid; negative components are clamped to 0 after each step."""
    if dt <= 0:
        raise UsageError("dt must be > 0")
    per_sample = steps_between(sample_every, dt)
    grid = sample_grid(t_end, sample_every)
    y = as_vector(y0, rhs.species)
    out = np.empty((grid.size, y.size))
    out[0] = y
    clamps = 0
    step = 0
    h = dt
    for j in range(1, grid.size):
        for _ in range(per_sample):
            t = step * dt
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            step += 1
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(step * dt)
            neg = y < 0
            if neg.any():
                clamps += int(neg.sum())
                y[neg] = 0.0
        out[j] = y
    if clamps:
        log.debug("ode: clamped negative components", clamps=clamps)
    return Trajectory(rhs.species, grid, out, Mode.ODE, {"scheme": "rk4", "dt": dt, "clamps": clamps})


def integrate_adaptive(rhs, y0, t_end, rel_tol=1e-6, abs_tol=1e-9, sample_every=1.0, grid=None):
    """Embedded RK4(5) with error control; dense output read off on the sample grid."""
    if rel_tol <= 0 or abs_tol <= 0:
        raise UsageError("tolerances must be > 0")
    grid = sample_grid(t_end, sample_every) if grid is None else np.asarray(grid, dtype=float)
    y = as_vector(y0, rhs.species)

    def fun(t, yy):
        dy = rhs(t, yy)
        if not np.all(np.isfinite(dy)):
            raise NonFiniteState(t, "right-hand side returned NaN/inf")
        return dy

    sol = solve_ivp(fun, (0.0, float(grid[-1])), y, method="RK45", t_eval=grid, rtol=rel_tol, atol=abs_tol)
    if not sol.success:
        raise StepUnderflow(f"adaptive integration stopped at t={sol.t[-1] if sol.t.size else 0:g}: {sol.message}")
    values = sol.y.T.copy()
    neg = values < 0
    clamps = int(neg.sum())
    values[neg] = 0.0
    return Trajectory(
        rhs.species, grid, values, Mode.ODE,
        {"scheme": "rk45", "rel_tol": rel_tol, "abs_tol": abs_tol, "clamps": clamps, "nfev": int(sol.nfev)},
    )
