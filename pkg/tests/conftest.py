import numpy as np
import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion still decides the test outcome."""
    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        CRITERIA[number] = f"{'PASS' if passed else 'FAIL'} [{number:2d}] {name}: {detail}"
        print(CRITERIA[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
