import numpy as np
import pytest

import zksim as zk

# Acceptance tests are named test_criterion_NN_*; collect their outcomes and
# print one pass/fail line per criterion at the end of the session.
_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_criterion_") and report.when == "call":
        _ACCEPTANCE[name] = "PASS" if report.passed else "FAIL"
    elif name.startswith("test_criterion_") and report.when == "setup" and report.skipped:
        _ACCEPTANCE[name] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        label = name.removeprefix("test_")
        terminalreporter.write_line(f"{label}: {_ACCEPTANCE[name]}")


@pytest.fixture(scope="session")
def lump_grid():
    return zk.Grid(Lx=10.0, Ly=10.0, Nx=512, Ny=512)


@pytest.fixture(scope="session")
def base_lump_p2(lump_grid):
    return zk.petviashvili(2, 1.0, grid=lump_grid)


@pytest.fixture(scope="session")
def base_lump_p3(lump_grid):
    return zk.petviashvili(3, 1.0, grid=lump_grid)


@pytest.fixture(scope="session")
def base_lump_p4(lump_grid):
    return zk.petviashvili(4, 1.0, grid=lump_grid)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260811)
