import networkx as nx
import numpy as np
import pytest
from hypothesis import strategies as st

from qubocd.graph_io import Graph


def graph_from_nx(G, weight=None) -> Graph:
    return Graph.from_pairs(
        ((str(u), str(v), float(d.get(weight, 1.0)) if weight else 1.0) for u, v, d in G.edges(data=True)),
        labels=[str(v) for v in G.nodes()],
    )


@pytest.fixture(scope="session")
def zachary() -> Graph:
    return graph_from_nx(nx.karate_club_graph())


@pytest.fixture(scope="session")
def lesmis() -> Graph:
    return graph_from_nx(nx.les_miserables_graph(), weight="weight")


@st.composite
def weighted_graphs(draw, min_nodes=2, max_nodes=10, connected=False, weighted=True):
    """Random simple graphs with at least one edge; weights in (0, 5]."""
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = set()
    if connected:
        # random spanning tree first
        for v in range(1, n):
            u = draw(st.integers(0, v - 1))
            chosen.add((u, v))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    chosen |= {p for p, keep in zip(pairs, mask) if keep}
    if not chosen:
        chosen.add((0, 1))
    weight = st.floats(0.1, 5.0, allow_nan=False) if weighted else st.just(1.0)
    edges = tuple((i, j, draw(weight)) for i, j in sorted(chosen))
    return Graph(n, edges)


def random_connected_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    return Graph(n, tuple((i, j, 1.0) for i, j in sorted(edges)))


ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def report():
    """Record the single pass/fail line of an acceptance criterion."""

    def emit(criterion: str, passed: bool, detail: str) -> None:
        line = f"{criterion} {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES[criterion] = line
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
