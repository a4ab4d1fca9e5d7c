import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hinanom.graph import HinGraph, schema_of  # noqa: E402
from hinanom.toy import toy_graph  # noqa: E402


@pytest.fixture(scope="session")
def toy():
    return toy_graph()


@pytest.fixture(scope="session")
def toy_schema(toy):
    return schema_of(toy)


def random_typed_graph(rng, n_nodes=None, n_types=None, n_relations=None, n_edges=None):
    """Small random typed multigraph plus its raw edge list."""
    n = n_nodes or int(rng.integers(5, 51))
    t = n_types or int(rng.integers(1, 4))
    node_type = np.concatenate([np.arange(t), rng.integers(t, size=n - t)])
    rng.shuffle(node_type)
    n_rel = n_relations or int(rng.integers(1, 5))
    ends = [(int(rng.integers(t)), int(rng.integers(t))) for _ in range(n_rel)]
    edges = []
    for _ in range(n_edges if n_edges is not None else int(rng.integers(0, 3 * n))):
        r = int(rng.integers(n_rel))
        a, b = ends[r]
        srcs, dsts = np.flatnonzero(node_type == a), np.flatnonzero(node_type == b)
        edges.append((int(rng.choice(srcs)), int(rng.choice(dsts)), r))
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    rel = np.array([e[2] for e in edges], dtype=np.int64)
    g = HinGraph([f"v{i}" for i in range(n)], [f"T{k}" for k in range(t)], node_type,
                 [f"r{k}" for k in range(n_rel)], ends, src, dst, rel)
    return g, edges


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
