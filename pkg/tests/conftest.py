import pytest

from singstar.graph import star

from helpers import NU3

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_edge():
    return star([2, 2], [1.0, 1.0], w=2)


@pytest.fixture
def star_322():
    return star(
        [3, 2, 2],
        [1.0, 0.8, 1.2],
        nu=[NU3, (0,), (-0.5,)],
        q=[((0.2, 0.1, 0.3), (0.4, -0.2)), ((0.7, 0.1),), ((0.5, -0.4, 0.1),)],
        w=3,
    )


@pytest.fixture
def star_332():
    gamma = [
        [[1, 0, 0], [0.3, 2, 0], [0.1, -0.2, 1.5]],
        [[1, 0, 0], [0.1, 1, 0], [0.2, 0.3, 0.7]],
        [[2, 0], [0.4, 1.2]],
    ]
    return star(
        [3, 3, 2],
        [1.0, 0.9, 1.2],
        nu=[NU3, NU3, (-0.5,)],
        q=[((0.2, 0.1, 0.3), (0.4, -0.2)), ((0.6,), (0.1, 0.2)), ((0.5, -0.4, 0.1),)],
        w=3,
        gamma=gamma,
    )


@pytest.fixture
def star_222():
    return star(
        [2, 2, 2],
        [1.0, 1.3, 0.8],
        nu=[(0,), (-0.5,), (0,)],
        q=[((0.3, 0.2),), ((0.5, -0.4, 0.1),), ((-0.2, 0.0, 0.6),)],
        w=3,
    )
