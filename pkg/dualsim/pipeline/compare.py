# FILE: dualsim/pipeline/compare.py
import numpy as np

from ..errors import EmptySample, GridMismatch
from ..stats import compare_trajectories, extreme_case_census
from ..utils import log


def run_compare(ode, ensemble, alpha=0.05, pairing="daily-mean", meta=None):
    log.step("compare")
    report = compare_trajectories(ode, ensemble.mean, alpha, pairing=pairing, ensemble=ensemble, meta=meta)
    log.ok(alpha=alpha, pairing=pairing, decision=report.summary)
    return report


def run_census(ensemble, predicates):
    log.step("census")
    rows = extreme_case_census(ensemble, predicates)
    log.ok(predicates=len(rows), reps=len(ensemble.replications))
    return rows


def closest_replication(ensemble, ode, species=None):
    """Index of the replication nearest the ODE run (summed squared relative deviation; ties -> lowest index)."""
    reps = ensemble.replications
    if not reps:
        raise EmptySample("no replications to choose from")
    names = tuple(species) if species else ode.species
    scores = []
    for r in reps:
        if not r.same_grid(ode):
            raise GridMismatch("replication grid does not match the ODE grid")
        total = 0.0
        for s in names:
            ref = ode.series(s)
            total += float(np.sum(((r.series(s) - ref) / (np.abs(ref) + 1.0)) ** 2))
        scores.append(total)
    return int(np.argmin(scores))
