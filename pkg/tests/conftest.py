import numpy as np
import pytest

from mrpsim.dynamics import PAPER_INERTIA, pack_state
from mrpsim.scenario import BUNDLED, bundled_scenario, run_scenario

PAPER_SIGMA0 = np.array([0.93, 0.0, 0.0])
PAPER_OMEGA0 = np.array([0.46, 0.0, 0.0])


@pytest.fixture
def inertia():
    return PAPER_INERTIA


@pytest.fixture
def paper_x0():
    return pack_state(PAPER_SIGMA0, PAPER_OMEGA0)


@pytest.fixture(scope="session")
def paper_runs():
    """Full 60 s runs of the five bundled scenarios, computed once per session."""
    return {name: run_scenario(bundled_scenario(name)) for name in BUNDLED}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda l: l.split("criterion ")[1]):
            terminalreporter.write_line(line)
