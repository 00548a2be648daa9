import numpy as np
import pytest

from varpath.grid_paths import TimeGrid

# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"ACCEPTANCE {number:2d}: {'PASS' if passed else 'FAIL'} — {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_grid():
    return TimeGrid(1.0, 256)
