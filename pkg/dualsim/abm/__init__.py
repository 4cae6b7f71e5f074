from .engine import run_ensemble, run_replication, substeps
from .peragent import AgentPool, step_per_agent
from .tauleap import apply_influx, step_tau_leap
from .transitions import (
    Backend,
    Effect,
    EngineConfig,
    Influx,
    RatePolicy,
    TransitionSpec,
    compile_channels,
)

__all__ = [
    "AgentPool",
    "Backend",
    "Effect",
    "EngineConfig",
    "Influx",
    "RatePolicy",
    "TransitionSpec",
    "apply_influx",
    "compile_channels",
    "run_ensemble",
    "run_replication",
    "step_per_agent",
    "step_tau_leap",
    "substeps",
]
