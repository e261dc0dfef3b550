import pytest

from maxmin_pb.core import Instance
from maxmin_pb.ingest import load_fixture


@pytest.fixture
def narrow_top():
    return load_fixture("narrow_top")


@pytest.fixture
def discount():
    return load_fixture("discount")


@pytest.fixture
def limit():
    return load_fixture("limit")


@pytest.fixture
def counties():
    return load_fixture("counties")


@pytest.fixture
def example1():
    return load_fixture("example1")


@pytest.fixture
def single_voter():
    def make(costs, budget):
        return Instance.build(costs, budget, [[f"p{k + 1}" for k in range(len(costs))]])
    return make


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
