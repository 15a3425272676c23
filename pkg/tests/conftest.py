import numpy as np
import pytest

from tunnelphase import dataset as ds


@pytest.fixture(scope="session")
def catalog():
    return ds.build_catalog()


@pytest.fixture(scope="session")
def small_xy():
    """Smooth 4-feature regression problem used by the model tests."""
    rng = np.random.default_rng(7)
    X = rng.uniform(0.0, 1.0, size=(300, 4))
    y = np.sin(3 * X[:, 0]) + 2 * X[:, 1] ** 2 - X[:, 2] + 0.1 * rng.normal(size=300)
    return X, y


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
