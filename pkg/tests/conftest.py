import math

import pytest

from wedgekrein.sector import SingularFunctions, build_basis
from wedgekrein.wedge import Wedge


@pytest.fixture(scope="session")
def wedge():
    return Wedge(1.5 * math.pi, 1.0)


@pytest.fixture(scope="session")
def full_wedge():
    return Wedge(2 * math.pi, 1.0)


@pytest.fixture(scope="session")
def basis(wedge):
    return build_basis(wedge)


@pytest.fixture(scope="session")
def singular(basis):
    return SingularFunctions(basis)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("WEDGEKREIN_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "cache"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
