"""Shared fixtures: pinned placements, cached cascade orbits, summary hook."""

import pytest

from cascadelab.lambda_set import build_genealogy, place
from cascadelab.toy_model import find_cascade

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_RESULTS: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_RESULTS[number] = f"[criterion {number:2d}] {status}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])


@pytest.fixture(scope="session")
def placed_n2():
    # pinned small instance used by the table and divisor oracles
    placed = place(build_genealogy(2), 7).scale(3, 2)
    assert placed.modes() == [(18, 28), (30, 32), (36, 4), (48, 8)]
    return placed


@pytest.fixture(scope="session")
def placed_n3():
    return place(build_genealogy(3), 7).scale(3, 2)


@pytest.fixture(scope="session")
def placed_n5():
    return place(build_genealogy(5), 1).scale(3, 2)


@pytest.fixture(scope="session")
def cascades():
    """Cascade orbits by generation count, computed once per session."""
    cache = {}

    def get(N: int, delta: float = 0.1):
        key = (N, delta)
        if key not in cache:
            cache[key] = find_cascade(N, delta)
        return cache[key]

    return get
