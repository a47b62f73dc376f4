import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("fockstop", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("fockstop")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_log():
    def log(line: str) -> None:
        print(line)
        ACCEPTANCE_LINES.append(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
