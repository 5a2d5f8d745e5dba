import pytest

from stochsched.rng import RandomStream

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return RandomStream(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
