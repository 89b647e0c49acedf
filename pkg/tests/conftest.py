import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pndlab.graph import build_graph, normalized_adjacency  # noqa: E402

from oracles import dense_adjacency, dense_gcn_norm, random_edges  # noqa: E402

REPO = Path(__file__).resolve().parents[1]
CORA = REPO / "data" / "cora"

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: trains models on real data (minutes)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_graph(rng, n=None, density=None):
    """Returns (SparseGraph, dense adjacency, dense normalized adjacency)."""
    n = int(rng.integers(1, 65)) if n is None else n
    density = rng.uniform(0.0, 0.3) if density is None else density
    edges = random_edges(rng, n, density)
    g = build_graph(edges.reshape(-1, 2), n)
    A = dense_adjacency(edges, n)
    return g, A, dense_gcn_norm(A)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_graph(rng):
    g, A, An = random_graph(rng, n=12, density=0.2)
    return g, A, An, normalized_adjacency(g)
