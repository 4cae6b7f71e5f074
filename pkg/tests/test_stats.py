import itertools
import math

import numpy as np
import pytest

from dualsim.errors import EmptySample, GridMismatch, NoSuchSeries, UsageError
from dualsim.schema import Ensemble, Mode, Trajectory
from dualsim.stats import (
    ExtinctBy,
    MaxBelow,
    compare_trajectories,
    default_predicates,
    extreme_case_census,
    parse_predicate,
    wilcoxon_rank_sum,
)


def _traj(values, mode=Mode.ODE, species=("Tumour",)):
    values = np.asarray(values, dtype=float).reshape(len(values), -1)
    return Trajectory(species, np.arange(len(values), dtype=float), values, mode)


def _brute_p(x, y):
    pooled = np.concatenate([x, y])
    order = np.argsort(np.argsort(pooled)) + 1  # ranks, no ties
    n1 = len(x)
    u_obs = order[:n1].sum() - n1 * (n1 + 1) / 2
    us = [sum(c) - n1 * (n1 + 1) / 2 for c in itertools.combinations(range(1, len(pooled) + 1), n1)]
    lo = sum(1 for u in us if u <= u_obs)
    hi = sum(1 for u in us if u >= u_obs)
    return min(1.0, 2 * min(lo, hi) / len(us))


def test_separated_triples():
    res = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
    assert res.statistic == 0
    assert res.pvalue == pytest.approx(0.1)


def test_identical_samples_are_not_rejected():
    x = np.linspace(0, 10, 50)
    assert wilcoxon_rank_sum(x, x).pvalue >= 0.99


@pytest.mark.parametrize("n1,n2", [(a, b) for a in range(1, 6) for b in range(1, 6)])
def test_exact_matches_enumeration(n1, n2):
    rng = np.random.default_rng(n1 * 10 + n2)
    for _ in range(3):
        pooled = rng.permutation(n1 + n2).astype(float)
        x, y = pooled[:n1], pooled[n1:]
        assert wilcoxon_rank_sum(x, y).pvalue == pytest.approx(_brute_p(x, y), abs=1e-12)


def test_symmetry():
    rng = np.random.default_rng(0)
    for k in range(100):
        x = rng.normal(size=rng.integers(1, 30))
        y = rng.normal(0.3, size=rng.integers(1, 30))
        assert wilcoxon_rank_sum(x, y).pvalue == pytest.approx(wilcoxon_rank_sum(y, x).pvalue)


def test_exact_and_normal_agree_at_ten():
    rng = np.random.default_rng(4)
    for _ in range(20):
        x, y = rng.normal(size=10), rng.normal(0.5, size=10)
        exact = wilcoxon_rank_sum(x, y, method="exact").pvalue
        normal = wilcoxon_rank_sum(x, y, method="asymptotic").pvalue
        assert abs(exact - normal) < 0.02


def test_one_sided_is_monotone_in_shift():
    rng = np.random.default_rng(8)
    x, y = rng.normal(size=15), rng.normal(size=15)
    ps = [wilcoxon_rank_sum(x, y + shift, alternative="less").pvalue for shift in np.linspace(0, 3, 7)]
    assert all(b <= a for a, b in zip(ps, ps[1:]))


def test_extreme_separation():
    assert wilcoxon_rank_sum(np.zeros(100), np.full(100, 100.0)).pvalue < 1e-6


def test_empty_and_bad_arguments():
    with pytest.raises(EmptySample):
        wilcoxon_rank_sum([], [1.0])
    with pytest.raises(UsageError):
        wilcoxon_rank_sum([1.0], [2.0], alternative="sideways")
    with pytest.raises(UsageError):
        wilcoxon_rank_sum([1.0, 1.0], [2.0], method="exact")


def test_compare_identical_runs():
    ode = _traj(np.linspace(100, 0, 11))
    mean = _traj(np.linspace(100, 0, 11), Mode.ABM_MEAN)
    report = compare_trajectories(ode, mean)
    assert not report.rejected
    assert report.summary == "fail to reject (1/1 species)"
    assert report.row("Tumour").decision == "fail to reject"
    with pytest.raises(NoSuchSeries):
        report.row("IL2")


def test_compare_detects_disagreement():
    ode = _traj(np.zeros(30))
    mean = _traj(np.full(30, 50.0), Mode.ABM_MEAN)
    report = compare_trajectories(ode, mean)
    assert report.rejected == ["Tumour"]
    assert report.summary == "reject (1/1 species)"


def test_compare_needs_one_grid():
    with pytest.raises(GridMismatch):
        compare_trajectories(_traj(np.zeros(5)), _traj(np.zeros(6), Mode.ABM_MEAN))


def test_compare_endpoint_pairing():
    reps = [_traj(np.full(4, v), Mode.ABM) for v in (9, 10, 11, 10)]
    ens = Ensemble.from_replications(reps, seeds=range(4))
    report = compare_trajectories(_traj(np.full(4, 10.0)), ens.mean, pairing="endpoint", ensemble=ens)
    row = report.row("Tumour")
    assert (row.n_x, row.n_y) == (4, 4)
    assert report.meta["pairing"] == "endpoint"
    with pytest.raises(UsageError):
        compare_trajectories(_traj(np.zeros(4)), ens.mean, pairing="endpoint")


def test_decision_follows_alpha():
    ode = _traj(np.arange(20.0))
    mean = _traj(np.arange(20.0) + 4, Mode.ABM_MEAN)
    p = compare_trajectories(ode, mean).rows[0].pvalue
    assert compare_trajectories(ode, mean, alpha=min(0.99, p * 2)).rejected == ["Tumour"]
    assert compare_trajectories(ode, mean, alpha=p / 2).rejected == []


def test_census_on_extinct_ensemble():
    reps = [_traj(np.zeros(5), Mode.ABM) for _ in range(3)]
    rows = extreme_case_census(Ensemble.from_replications(reps), ["tumour-extinct-by(0)"])
    assert rows[0].name == "tumour-extinct-by(0)"
    assert (rows[0].count, rows[0].total, rows[0].frequency) == (3, 3, 1.0)


def test_extinction_respects_the_deadline():
    t = _traj([5, 3, 0, 0, 0], Mode.ABM)
    assert ExtinctBy("Tumour", 2)(t)
    assert not ExtinctBy("Tumour", 1)(t)


def test_parse_predicate():
    species = ("Tumour", "Effector", "IL2", "TGFBeta")
    assert parse_predicate("tumour-extinct-by(200)", species) == ExtinctBy("Tumour", 200.0)
    assert parse_predicate("tumor-extinct-by(200)", species).species == "Tumour"
    assert parse_predicate("effector-extinct-by(50)", species) == ExtinctBy("Effector", 50.0)
    p = parse_predicate("species-max-below(TGFBeta, 3)", species)
    assert p == MaxBelow("TGFBeta", 3.0) and p.name == "species-max-below(TGFBeta,3)"
    with pytest.raises(UsageError):
        parse_predicate("tumour-vanishes(3)", species)
    with pytest.raises(NoSuchSeries):
        parse_predicate("il2-extinct-by(5)", ("Tumour",))


def test_max_below():
    assert MaxBelow("Tumour", 3)(_traj([0, 1, 2], Mode.ABM))
    assert not MaxBelow("Tumour", 2)(_traj([0, 1, 2], Mode.ABM))


def test_default_predicates_follow_species():
    names = [p.name for p in default_predicates(("Tumour", "Effector", "IL2", "TGFBeta"))]
    assert names == ["tumour-extinct-by(200)", "effector-extinct-by(200)", "species-max-below(TGFBeta,3)"]
    assert [p.name for p in default_predicates(("Tumour",))] == ["tumour-extinct-by(200)"]


def test_rank_sum_p_in_unit_interval():
    rng = np.random.default_rng(12)
    for _ in range(50):
        x = rng.integers(0, 5, size=rng.integers(1, 40))
        y = rng.integers(0, 5, size=rng.integers(1, 40))
        p = wilcoxon_rank_sum(x, y).pvalue
        assert 0 <= p <= 1 and not math.isnan(p)
