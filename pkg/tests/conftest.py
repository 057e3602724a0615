import json
import os

import pytest

from app.api.services.catalogue import catalogue_quiver
from app.api.services.quiver import quiver_to_json
from app.core.store import ReportStore


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale checks")
    parser.addoption("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for acceptance-scale checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def slow_jobs(request):
    return max(1, request.config.getoption("--jobs"))


@pytest.fixture
def d3():
    return catalogue_quiver("X0", (2, 2, 3, 4))


@pytest.fixture
def star():
    return catalogue_quiver("Xs", (1, 1, 2, 2, 3, 2, 2, 3, 3))


@pytest.fixture
def d3_file(tmp_path, d3):
    path = tmp_path / "d3.json"
    path.write_text(json.dumps(quiver_to_json(d3)), encoding="utf-8")
    return path


@pytest.fixture
def store(tmp_path):
    return ReportStore(tmp_path / "reports")
