import numpy as np
import pytest

from darglade import DarParams, derive_stream, get_innovation, simulate

STATIONARY = DarParams(0.7, 0.4, 0.5)
EXPLOSIVE = DarParams(1.0, 3.0, 0.5)


@pytest.fixture(scope="session")
def normal():
    return get_innovation("normal")


@pytest.fixture(scope="session")
def laplace():
    return get_innovation("laplace")


@pytest.fixture(scope="session")
def st3():
    return get_innovation("st3")


@pytest.fixture(scope="session")
def stationary_path(normal):
    return simulate(STATIONARY, normal, 400, 500, derive_stream(11, 0))


@pytest.fixture(scope="session")
def explosive_path(laplace):
    return simulate(EXPLOSIVE, laplace, 400, 0, derive_stream(12, 0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
