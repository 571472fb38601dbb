import numpy as np
import pytest
from hypothesis import settings

from clocksync import ModelParams

SEED = 20130228

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture
def small_net():
    """Two sensors, skewed clocks; the worked example used across the suite."""
    return ModelParams(N=2, r=1.0, v=2.0, sigma=1.0, alpha=1.0, beta=2.0)


@pytest.fixture
def small_net_no_skew():
    return ModelParams(N=2, r=1.0, v=1.0, sigma=1.0, alpha=1.0, beta=2.0)


@pytest.fixture
def wide_net():
    return ModelParams(N=50, r=1.0, v=1.1, sigma=0.5, alpha=2.0, beta=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(VERDICTS, [])

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert bool(ok), line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
