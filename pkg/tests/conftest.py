import numpy as np
import pytest

from wehrl_lab.symrep import SpaceSignature, haar_unit_vectors

GRID = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 2)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit(rng, N):
    return haar_unit_vectors(rng, N, 1)[0]


@pytest.fixture(params=GRID, ids=lambda c: f"N{c[0]}M{c[1]}")
def sig(request):
    return SpaceSignature(*request.param)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
