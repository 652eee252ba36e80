import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, printed together at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report(capsys):
    def emit(number: int, passed: bool, detail: str, advisory: bool = False) -> None:
        verdict = "PASS" if passed else ("FAIL (advisory)" if advisory else "FAIL")
        line = f"criterion {number:2d}: {verdict} | {detail}"
        ACCEPTANCE_LINES[number] = line
        with capsys.disabled():
            print(f"\n{line}")

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
