from pathlib import Path

import pytest

from trunckit.cli import read
from trunckit.solver import solve

DATA = Path(__file__).parent / "data"

# PASS/FAIL lines recorded by the acceptance tests
ACCEPTANCE: list = []


def load(name):
    return read(str(DATA / f"{name}.tri"))


@pytest.fixture(scope="session")
def figure_eight():
    return load("figure_eight").tri


@pytest.fixture(scope="session")
def sister():
    return load("sister").tri


@pytest.fixture(scope="session")
def fujii():
    return load("fujii").tri


@pytest.fixture(scope="session")
def mixed():
    return load("mixed").tri


@pytest.fixture(scope="session")
def octahedral():
    return load("octahedral").tri


@pytest.fixture(scope="session")
def solved(figure_eight, sister, fujii, mixed, octahedral):
    """Solved angles keyed by example name."""
    out = {}
    for name, tri in [("figure_eight", figure_eight), ("sister", sister),
                      ("fujii", fujii), ("mixed", mixed), ("octahedral", octahedral)]:
        result = solve(tri)
        assert result.solved, name
        out[name] = result.theta
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
