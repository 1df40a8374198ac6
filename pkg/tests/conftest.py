import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# fixed 10-point residual fixture shared by the kernel and JB oracles
RESID10 = np.array([0.31, -1.2, 0.45, 2.1, -0.7, 0.05, -0.33, 1.4, -2.2, 0.9])


@pytest.fixture
def resid10():
    return RESID10.copy()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
