import json
from importlib import resources

import numpy as np
import pytest

from finitegap.domain import ChangeOfVariables, map_set, parse_scene, validate_divisor, validate_set
from finitegap.transform import transform_context

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def load_scene(name: str):
    text = resources.files("finitegap").joinpath(f"scenes/{name}.json").read_text()
    return parse_scene(json.loads(text))


ONE_GAP = [(-0.5, -0.25)]
TWO_GAP = [(-0.7, -0.5), (-0.3, -0.1)]


@pytest.fixture(scope="session")
def one_gap():
    return validate_set(ONE_GAP)


@pytest.fixture(scope="session")
def two_gap():
    return validate_set(TWO_GAP)


@pytest.fixture(scope="session")
def one_gap_div(one_gap):
    return validate_divisor(one_gap, [(-0.4, 1)])


@pytest.fixture(scope="session")
def two_gap_div(two_gap):
    return validate_divisor(two_gap, [(-0.6, 1), (-0.2, -1)])


@pytest.fixture(scope="session")
def free_ctx():
    fgs = validate_set([])
    return transform_context(fgs, validate_divisor(fgs, []), -2.0)


@pytest.fixture(scope="session")
def one_gap_ctx(one_gap, one_gap_div):
    return transform_context(one_gap, one_gap_div, -2.0)


@pytest.fixture(scope="session")
def one_gap_zset(one_gap, one_gap_div):
    return map_set(ChangeOfVariables(-2.0), one_gap, one_gap_div)[0]


@pytest.fixture(scope="session")
def two_gap_ctx(two_gap, two_gap_div):
    return transform_context(two_gap, two_gap_div, -2.0)


@pytest.fixture(scope="session")
def two_gap_zset(two_gap, two_gap_div):
    return map_set(ChangeOfVariables(-2.0), two_gap, two_gap_div)[0]


def random_gaps(rng: np.random.Generator, g: int, lo: float = -0.9, hi: float = 1.5,
                min_width: float = 0.05) -> list[tuple[float, float]]:
    """Sorted endpoints with every gap and inner band at least ``min_width`` wide."""
    while True:
        e = np.sort(rng.uniform(lo, hi, 2 * g))
        if np.all(np.diff(np.concatenate([[-1.0], e])) >= min_width):
            return [(float(e[2 * k]), float(e[2 * k + 1])) for k in range(g)]


def random_divisor(rng: np.random.Generator, fgs, margin: float = 0.1):
    entries = []
    for a, b in fgs.gaps:
        d = margin * (b - a)
        entries.append((float(rng.uniform(a + d, b - d)), int(rng.choice([-1, 1]))))
    return validate_divisor(fgs, entries)
