import json
import pathlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def frozen():
    """Reference numbers produced by tests/oracles/freeze.py."""
    return json.loads((DATA / "frozen.json").read_text())


def ball_points(rng, n, d, R=1.0):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return R * rng.uniform(size=(n, 1)) ** (1.0 / d) * g


def lift(X, R=1.0):
    X = np.atleast_2d(X)
    return np.hstack([X, np.full((X.shape[0], 1), R)])


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
