import pytest

from poisrec.pathsim import PoissonPath, build_trace

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def hand_path():
    """X = [1.0, 0.5, 2.0] observed to t = 2 (third lifetime is the overshoot)."""
    path = PoissonPath.from_interarrivals([1.0, 0.5, 2.0], horizon=2.0)
    return path, build_trace(path)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
