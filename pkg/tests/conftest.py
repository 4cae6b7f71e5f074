# Ensures "import dualsim" works without installing a package.
import multiprocessing
import os
import pathlib
import sys

import pytest

root = pathlib.Path(__file__).resolve().parents[1]
if str(root) not in sys.path:
    sys.path.insert(0, str(root))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long Monte-Carlo acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo acceptance test (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _isolated_home(tmp_path, monkeypatch):
    # settings and outputs never touch the real home directory
    monkeypatch.setenv("DUALSIM_HOME", str(tmp_path / "home"))
    monkeypatch.delenv("DUALSIM_SEED", raising=False)


@pytest.fixture(scope="session")
def pool_workers():
    """Worker processes for the long runs: every CPU, or 1 where process pools are unavailable."""
    try:
        with multiprocessing.Pool(processes=1) as pool:
            pool.map(abs, [-2])
    except (OSError, ImportError, NotImplementedError):
        return 1
    return os.cpu_count() or 1
