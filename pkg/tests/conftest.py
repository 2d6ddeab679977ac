import numpy as np
import pytest

from tdhsim import hamiltonian as hm

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bench():
    return hm.benchmark_hamiltonian()


@pytest.fixture(scope="session")
def bench_bounds(bench):
    return bench.derivative_bounds(3)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
