import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgshield.anonymize import AnonymizationParams, AnonymizationResult, kguard, klone
from kgshield.errors import InvalidParameter
from kgshield.generators import assign_weights, erdos_renyi_directed
from kgshield.graph import Graph, is_weakly_connected
from kgshield.metrics import (
    NA,
    delta_anonymity,
    evaluate,
    klone_overhead_bound,
    nodes_overhead,
    utility_sym,
    utility_u,
    verify_kx_anonymisation,
    wasserstein1,
)
from kgshield.reasoner import Query, RuleProgram

from conftest import make_graph, small_graphs

TWO = [Query.two_owns(), Query.two_q_owns(0.5)]


def cdf_w1(a, b):
    """Integral of |F_a - F_b| over the merged support, in exact arithmetic."""
    a = [Fraction(v) for v in a]
    b = [Fraction(v) for v in b]
    pts = sorted(set(a) | set(b))
    total = Fraction(0)
    for lo, hi in zip(pts, pts[1:]):
        fa = Fraction(sum(1 for v in a if v <= lo), len(a))
        fb = Fraction(sum(1 for v in b if v <= lo), len(b))
        total += abs(fa - fb) * (hi - lo)
    return float(total)


# --- W1 -------------------------------------------------------------------

def test_w1_examples():
    assert wasserstein1([1, 2, 3], [3, 2, 1]) == 0.0
    assert abs(wasserstein1([0], [1]) - 1.0) <= 1e-12
    assert abs(wasserstein1([1, 1, 2], [1, 2, 3]) - 2 / 3) <= 1e-12


def test_w1_rejects_empty():
    with pytest.raises(InvalidParameter):
        wasserstein1([], [1.0])


small_samples = st.lists(st.integers(-5, 5), min_size=1, max_size=7)


@given(small_samples, small_samples)
def test_w1_matches_cdf_oracle(a, b):
    assert wasserstein1(a, b) == pytest.approx(cdf_w1(a, b), abs=1e-12)


@given(small_samples, small_samples, small_samples)
def test_w1_metric_axioms(a, b, c):
    ab, ba = wasserstein1(a, b), wasserstein1(b, a)
    assert ab == pytest.approx(ba, abs=1e-12)
    assert ab >= 0
    assert wasserstein1(a, c) <= ab + wasserstein1(b, c) + 1e-12
    assert (ab < 1e-12) == (sorted(a * len(b)) == sorted(b * len(a)))


# --- utility --------------------------------------------------------------

def test_utility_zero_on_identity(ownership):
    ident = AnonymizationResult.identity(ownership)
    qs = TWO + [Query.holding(2)]
    assert utility_u(ownership, RuleProgram.CONTROL, ident, qs) == 0.0
    assert utility_sym(ownership, RuleProgram.CONTROL, ident, qs) == 0.0


def test_utility_empty_answers_score_zero():
    g = make_graph([(0, 1, 0.2)])
    assert utility_u(g, RuleProgram.CONTROL, Graph([9], [], {9: "z"}), [Query.two_owns()]) == 0.0


def test_utility_half_lost_and_jaccard():
    # vertices 0..3 each own two companies in g; the release keeps 0 and 1 plus a newcomer 9
    tri = []
    for v in range(4):
        tri += [(v, 10, 0.1), (v, 11, 0.1)]
    g = make_graph(tri)
    rel = make_graph([(0, 10, 0.1), (0, 11, 0.1), (1, 10, 0.1), (1, 11, 0.1), (9, 10, 0.1), (9, 11, 0.1)])
    a = AnonymizationResult(rel, {v: v for v in (0, 1, 10, 11)}, {}, frozenset(), frozenset())
    assert utility_u(g, RuleProgram.NONE, a, [Query.two_owns()]) == 0.5
    # {0,1,2,3} vs {0,1,9}: sym diff {2,3,9} over union of five
    assert utility_sym(g, RuleProgram.NONE, a, [Query.two_owns()]) == pytest.approx(3 / 5)


def test_utility_sym_two_thirds():
    g = make_graph([(1, 5, 0.1), (1, 6, 0.1), (2, 5, 0.1), (2, 6, 0.1)])
    rel = make_graph([(2, 5, 0.1), (2, 6, 0.1), (3, 5, 0.1), (3, 6, 0.1)], n=None)
    rel = Graph(sorted(set(rel.vertices) | {1}), rel.edges, {**rel.labels, 1: "L1"})
    a = AnonymizationResult(rel, {1: 1, 2: 2, 5: 5, 6: 6}, {}, frozenset(), frozenset())
    assert utility_sym(g, RuleProgram.NONE, a, [Query.two_owns()]) == pytest.approx(2 / 3)


def test_utility_needs_queries(ownership):
    with pytest.raises(InvalidParameter):
        utility_u(ownership, RuleProgram.CONTROL, ownership, [])


@given(small_graphs(max_n=6), small_graphs(max_n=6))
def test_utilities_in_unit_interval(g, a):
    for f in (utility_u, utility_sym):
        assert 0.0 <= f(g, RuleProgram.CONTROL, a, TWO + [Query.holding(1)]) <= 1.0


# --- overhead -------------------------------------------------------------

def test_overhead_examples():
    g = Graph(range(100), [], {i: str(i) for i in range(100)})
    a = Graph(range(300), [], {i: f"r{i}" for i in range(300)})
    assert nodes_overhead(g, a) == 200.0
    assert nodes_overhead(g, g) == 0.0
    assert klone_overhead_bound(100, 3) == pytest.approx(100 * (601 - 100) / 100)
    with pytest.raises(InvalidParameter):
        nodes_overhead(Graph([], [], {}), a)


# --- delta anonymity and the verifier --------------------------------------

def connected(n, seed):
    for s in itertools.count(seed):
        g = erdos_renyi_directed(n, seed=s)
        if is_weakly_connected(g):
            return assign_weights(g, "economic", s)


@pytest.fixture(scope="module")
def er20():
    g = connected(20, 3)
    return g, klone(g, RuleProgram.CONTROL, AnonymizationParams(k=2, m=2, seed=7, queries=TWO))


def test_klone_release_verifies(er20):
    g, a = er20
    for x in (2, 3):
        rep = verify_kx_anonymisation(g, a, RuleProgram.CONTROL, 2, x)
        assert rep.passed, rep.to_dict()
        assert rep.nags_checked == rep.nags_passed > 0
        assert delta_anonymity(g, a, RuleProgram.CONTROL, 2, x) == 1.0


def test_unanonymized_graph_fails(er20):
    g, _ = er20
    rep = verify_kx_anonymisation(g, AnonymizationResult.identity(g), RuleProgram.CONTROL, 2, 3)
    assert set(rep.failed_items()) == {"labels_disjoint", "weights_changed", "isomorphic_copies"}
    assert delta_anonymity(g, g, RuleProgram.CONTROL, 2, 3) < 1.0


def test_single_restored_weight_flags_item_three(er20):
    g, a = er20
    e0 = g.edges[0]
    bad = AnonymizationResult(a.released.with_weights({e0.id: e0.weight}), a.identity_map, a.edge_map,
                              a.synthetic_edges, a.synthetic_vertices)
    rep = verify_kx_anonymisation(g, bad, RuleProgram.CONTROL, 2, 2)
    assert rep.failed_items() == ["weights_changed"]
    assert rep.weights_changed.counterexamples == [e0.id]


def test_missing_edge_flags_augmentation(er20):
    g, a = er20
    drop = g.edges[0].id
    rel = a.released
    cut = Graph(rel.vertices, [e for e in rel.edges if e.id != drop], rel.labels)
    bad = AnonymizationResult(cut, a.identity_map, a.edge_map, a.synthetic_edges, a.synthetic_vertices)
    rep = verify_kx_anonymisation(g, bad, RuleProgram.CONTROL, 2, 2)
    assert not rep.augmentation.passed
    assert ("edge", drop) in rep.augmentation.counterexamples


def test_delta_drops_as_k_grows(er20):
    g, a = er20
    vals = [delta_anonymity(g, a, RuleProgram.CONTROL, k, 3) for k in (2, 4, 8)]
    assert vals[0] == 1.0
    assert vals == sorted(vals, reverse=True)


def test_delta_sampling_is_seeded(er20):
    g, a = er20
    one = delta_anonymity(g, a, RuleProgram.CONTROL, 3, 3, sample=30, seed=5)
    assert one == delta_anonymity(g, a, RuleProgram.CONTROL, 3, 3, sample=30, seed=5)
    assert 0.0 <= one <= 1.0
    with pytest.raises(InvalidParameter):
        delta_anonymity(g, a, RuleProgram.CONTROL, 3, 3, sample=0)


def test_motif_world_is_fully_hidden():
    # three bridged copies of a 2-vertex motif with diverse degrees after anonymization
    g = make_graph([(0, 1, 0.6), (2, 3, 0.6), (4, 5, 0.6), (1, 2, 0.1), (3, 4, 0.1)])
    a = kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=3, x=2, m=2, seed=0))
    assert delta_anonymity(g, a, RuleProgram.CONTROL, 3, 2) == 1.0
    assert verify_kx_anonymisation(g, a, RuleProgram.CONTROL, 3, 2).passed


def test_delta_one_agrees_with_item_four(er20):
    g, a = er20
    rep = verify_kx_anonymisation(g, a, RuleProgram.CONTROL, 3, 2)
    d = delta_anonymity(g, a, RuleProgram.CONTROL, 3, 2)
    assert (d == 1.0) == bool(rep.isomorphic_copies.passed)
    assert d == pytest.approx(rep.nags_passed / rep.nags_checked)


def test_parallel_check_matches_serial(er20):
    g, a = er20
    assert delta_anonymity(g, a, RuleProgram.CONTROL, 3, 3, workers=2) == \
        delta_anonymity(g, a, RuleProgram.CONTROL, 3, 3)


def test_evaluate_report_keys(er20):
    g, a = er20
    rep = evaluate(g, a, RuleProgram.CONTROL, TWO, k=2, x=2).to_json()
    assert set(rep) == {"utility_u", "utility_sym", "w1_degree", "w1_weight", "nodes_overhead_pct",
                        "delta_anonymity", "augmentation_intact"}
    assert rep["delta_anonymity"] == 1.0
    assert evaluate(g, a, RuleProgram.CONTROL).to_json()["utility_u"] == NA
