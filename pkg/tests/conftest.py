import numpy as np
import pytest
from hypothesis import settings

from flowsort_choquet import CapacityModel, load_problem, load_scenarios

settings.register_profile("repo", deadline=None, max_examples=100, derandomize=True)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def car_problem():
    return load_problem("car_example")


@pytest.fixture(scope="session")
def car_scenarios():
    return load_scenarios("car_scenarios")


@pytest.fixture(scope="session")
def car_model():
    # Interaction keys are 0-based: (1, 2) is acceleration/max speed.
    return CapacityModel.from_shapley([0.25, 0.21, 0.16, 0.38], {(1, 2): -0.08, (2, 3): 0.10})


@pytest.fixture(scope="session")
def two_criteria_model():
    return CapacityModel.from_shapley([0.5, 0.5], {(0, 1): 0.2})


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        if not ok:
            pytest.fail(line, pytrace=False)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
