import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from commlap.graph import WeightedGraph

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_graph(n, rng, p=0.5, connected=True):
    """Erdos-Renyi graph with U(0.1, 1) weights; a spanning path is added when ``connected``."""
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges[(i, j)] = rng.uniform(0.1, 1.0)
    if connected:
        for i in range(n - 1):
            edges.setdefault((i, i + 1), rng.uniform(0.1, 1.0))
    return WeightedGraph.from_edges(n, [(i, j, w) for (i, j), w in edges.items()])


def random_symmetric(n, rng):
    A = rng.normal(size=(n, n))
    return 0.5 * (A + A.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# outcomes of the acceptance criteria, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, details, seconds = ACCEPTANCE[number]
        extra = f" [{'; '.join(details)}]" if details else ""
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}{extra}")
