import pytest
from hypothesis import HealthCheck, settings

from hausdorff_lab.gridfn import GridSpec

settings.register_profile(
    "lab", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def line_grid():
    """The default one-dimensional grid: half-width 512, 2^16 nodes."""
    return GridSpec.uniform(1, 512.0, 2 ** 16)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec.uniform(1, 16.0, 1024)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion; shown in the terminal summary."""
    def log(criterion: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion:2d}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
