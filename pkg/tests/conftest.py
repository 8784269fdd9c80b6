import itertools

import networkx as nx
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kgshield.graph import Edge, Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# weights chosen so that sums land on both sides of the 0.5 threshold
WEIGHTS = [0.0, 0.1, 0.2, 0.25, 0.3, 0.35, 0.5, 0.55, 0.6, 0.8, 1.0]


@st.composite
def small_graphs(draw, min_n=1, max_n=7, max_edges=14, weighted=True, self_loops=True):
    n = draw(st.integers(min_n, max_n))
    m = draw(st.integers(0, max_edges))
    edges = []
    for i in range(m):
        s = draw(st.integers(0, n - 1))
        d = draw(st.integers(0, n - 1))
        if s == d and not self_loops:
            continue
        w = draw(st.sampled_from(WEIGHTS)) if weighted else None
        edges.append(Edge(len(edges), s, d, w))
    return Graph(range(n), edges, {v: f"L{v}" for v in range(n)}, weighted=weighted)


def make_graph(triples, n=None, weighted=True):
    """Graph on integer vertices from (src, dst[, weight]) tuples."""
    vs = set()
    for t in triples:
        vs.update(t[:2])
    if n is not None:
        vs.update(range(n))
    edges = [Edge(i, t[0], t[1], (t[2] if weighted else None)) for i, t in enumerate(triples)]
    return Graph(sorted(vs), edges, {v: f"L{v}" for v in vs}, weighted=weighted)


def to_nx(g: Graph) -> nx.MultiDiGraph:
    h = nx.MultiDiGraph()
    h.add_nodes_from(g.vertices)
    for e in g.edges:
        h.add_edge(e.src, e.dst, weight=e.weight)
    return h


def brute_connected_subsets(g: Graph, x: int) -> set[frozenset]:
    h = to_nx(g)
    out = set()
    for combo in itertools.combinations(g.vertices, x):
        if nx.is_weakly_connected(h.subgraph(combo)):
            out.add(frozenset(combo))
    return out


@pytest.fixture
def ownership():
    """Company ownership example: A controls D, E and B; D controls E."""
    return Graph.from_edge_list([
        ("A", "B", 0.30), ("E", "B", 0.35), ("A", "D", 0.55), ("D", "E", 0.60), ("F", "E", 0.10),
    ])


def by_label(g: Graph, pairs):
    return {(g.labels[u], g.labels[v]) for u, v in pairs}


# acceptance lines are collected here and printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
