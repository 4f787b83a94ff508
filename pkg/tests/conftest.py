import numpy as np
import pytest

from fokkerlab.convergence import run_convergence
from fokkerlab.rates import BUILTIN_MODELS, DEFAULT_U0, RateModel

CANONICAL_NS = (50, 100, 200, 400)


@pytest.fixture
def ehrenfest() -> RateModel:
    return BUILTIN_MODELS["ehrenfest"]


@pytest.fixture
def u0():
    return DEFAULT_U0


@pytest.fixture(scope="session")
def canonical_report():
    """Ehrenfest, u0 = 30 z^2 (1-z)^2, t0 = 1, r = 8, trajectories kept."""
    return run_convergence(BUILTIN_MODELS["ehrenfest"], DEFAULT_U0, 1.0, CANONICAL_NS, 8, keep_pairs=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
