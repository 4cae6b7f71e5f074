import numpy as np
import pytest

from dualsim.errors import NoSuchSeries
from dualsim.models import ScenarioConfig, get_scenario
from dualsim.pipeline.experiment import run_experiment
from dualsim.schema import Mode, Trajectory
from dualsim.view.export import emit_csv, parse_csv, trajectory_csv, write_result, write_run


@pytest.fixture(scope="module")
def zero_result():
    cfg = ScenarioConfig(name="case0", case=0, init={"Tumour": 0}, horizon=3, n_reps=1)
    return run_experiment(cfg)


def test_all_zero_csv(zero_result):
    assert emit_csv(zero_result, "ode") == "t,Tumour\n0,0\n1,0\n2,0\n3,0"
    assert emit_csv(zero_result, "abm-mean") == "t,Tumour\n0,0\n1,0\n2,0\n3,0"
    assert emit_csv(zero_result, "abm-rep-0") == "t,Tumour\n0,0\n1,0\n2,0\n3,0"


def test_report_and_census_csv(zero_result):
    header, rows = parse_csv(emit_csv(zero_result, "report"))
    assert header == ["species", "U", "p", "decision"]
    assert rows[0][0] == "Tumour" and rows[0][3] == "fail to reject"
    header, rows = parse_csv(emit_csv(zero_result, "census"))
    assert header == ["predicate", "count", "total", "frequency"]
    assert rows == [["tumour-extinct-by(200)", 1, 1, 1]]


def test_empty_trajectory_is_header_only():
    traj = Trajectory(("Tumour",), [], np.empty((0, 1)), Mode.ODE)
    assert trajectory_csv(traj) == "t,Tumour"


def test_values_survive_the_text_form():
    cfg = get_scenario("case1-s2").model_copy(update={"n_reps": 2, "horizon": 5.0})
    result = run_experiment(cfg, base_seed=3)
    header, rows = parse_csv(emit_csv(result, "ode"))
    assert header == ["t", "Tumour", "Effector"]
    assert np.array_equal(np.array(rows, dtype=float)[:, 1:], result.ode.values)


def test_unknown_series(zero_result):
    with pytest.raises(NoSuchSeries):
        emit_csv(zero_result, "abm-rep-1")
    with pytest.raises(NoSuchSeries):
        emit_csv(zero_result, "bogus")


def test_write_result_and_latest_alias(zero_result, tmp_path):
    run_dir, written = write_result(zero_result, tmp_path, run_id="r1")
    assert sorted(written) == ["abm-mean.csv", "census.csv", "ode.csv", "report.csv"]
    assert (tmp_path / "case0_r1" / "ode.csv").read_text(encoding="utf-8") == "t,Tumour\n0,0\n1,0\n2,0\n3,0\n"
    assert (tmp_path / "case0_latest" / "census.csv").exists()


def test_write_run_replaces_latest(tmp_path):
    write_run(tmp_path, "demo", {"a.csv": "x\n1"}, run_id="one")
    write_run(tmp_path, "demo", {"b.csv": "y\n2"}, run_id="two")
    latest = tmp_path / "demo_latest"
    assert not (latest / "a.csv").exists()
    assert (latest / "b.csv").read_text(encoding="utf-8") == "y\n2\n"


def test_plots_are_written(zero_result, tmp_path):
    pytest.importorskip("matplotlib")
    _, written = write_result(zero_result, tmp_path, series=("ode",), run_id="p", plot_reps=5)
    assert "Tumour.svg" in written
    assert (tmp_path / "case0_p" / "Tumour.svg").read_text(encoding="utf-8").lstrip().startswith("<?xml")
