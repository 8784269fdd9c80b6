import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgshield.anonymize import (
    AnonymizationParams,
    anonymize,
    choose_deg,
    kguard,
    klone,
    noising_candidates,
    split_and_merge,
    weight_noising,
    weight_noising_trials,
)
from kgshield.anonymize.split import bisect_parts
from kgshield.distributions import (
    EmpiricalKde,
    NegativeBinomial,
    PointMass,
    TruncatedSupport,
    Uniform01,
    WEIGHT_TOLERANCE,
    sample_distinct_weights,
)
from kgshield.errors import InvalidParameter, NotWeaklyConnected, UnsupportedProgram
from kgshield.generators import assign_weights, erdos_renyi_directed, scale_free
from kgshield.graph import Graph, induced_subgraph, is_weakly_connected, save_graph, sensitive_attributes
from kgshield.metrics import verify_kx_anonymisation
from kgshield.reasoner import Query, RuleProgram
from kgshield.subiso import IsoMap, make_handle, verify_iso_map
from kgshield.utility import utility_sym_graphs

from conftest import make_graph

TWO = [Query.two_owns(), Query.two_q_owns(0.5)]


def connected_er(n, seed, mode="economic"):
    """First seeded Erdős graph at or after ``seed`` that is weakly connected."""
    for s in itertools.count(seed):
        g = erdos_renyi_directed(n, seed=s)
        if is_weakly_connected(g):
            return assign_weights(g, mode, s)


# --- distributions --------------------------------------------------------

def test_kde_stays_in_unit_interval():
    kde = EmpiricalKde.fit([0.0, 0.01, 0.99, 1.0])
    rng = np.random.default_rng(0)
    w = kde.sample(rng, np.full(5000, np.nan))
    assert w.min() >= 0.0 and w.max() <= 1.0


def test_kde_anchored_draws_stay_near_anchor():
    kde = EmpiricalKde.fit([0.5], bandwidth=0.02)
    w = kde.sample(np.random.default_rng(1), np.full(4000, 0.3))
    assert abs(w.mean() - 0.3) < 0.005
    assert abs(w.std() - 0.02) < 0.003


def test_distinct_weights_never_hit_anchor():
    # a zero-width kernel would always return the anchor; the guard must move it
    class Echo:
        def sample(self, rng, anchors):
            return np.nan_to_num(np.asarray(anchors), nan=0.5)

    anchors = np.asarray([0.2, 1.0, np.nan])
    out = sample_distinct_weights(Echo(), np.random.default_rng(0), anchors)
    assert abs(out[0] - 0.2) > WEIGHT_TOLERANCE and abs(out[1] - 1.0) > WEIGHT_TOLERANCE
    assert 0.0 <= out.min() and out.max() <= 1.0
    assert out[2] == 0.5


def test_truncated_support_bounds():
    d = TruncatedSupport(NegativeBinomial(2.0, 0.3), 5)
    rng = np.random.default_rng(3)
    draws = [d.draw(rng) for _ in range(2000)]
    assert min(draws) >= 1 and max(draws) <= 5


def test_negative_binomial_fit_moments():
    rng = np.random.default_rng(4)
    xs = rng.negative_binomial(3.0, 0.4, size=20000)
    nb = NegativeBinomial.fit(xs)
    assert nb.r == pytest.approx(3.0, rel=0.1)
    assert nb.p == pytest.approx(0.4, rel=0.05)
    # under-dispersed data still gives a valid law
    flat = NegativeBinomial.fit([2, 2, 2, 2])
    assert 0 < flat.p <= 1


# --- choose_deg -----------------------------------------------------------

def test_choose_deg_examples():
    g = make_graph([(0, 5, 0.1), (0, 6, 0.1), (1, 5, 0.1), (1, 6, 0.1)])
    assert choose_deg(g, "out", PointMass(1), [0, 1], seed=0) == [2, 3]
    assert choose_deg(g, "out", PointMass(1), [0], seed=0) == [2]
    empty = Graph([0, 1, 2], [], {0: "a", 1: "b", 2: "c"})
    assert choose_deg(empty, "in", PointMass(1), [0, 1, 2], seed=0) == [0, 1, 2]


def test_choose_deg_errors():
    g = make_graph([(0, 1, 0.1)])
    with pytest.raises(InvalidParameter):
        choose_deg(g, "sideways", PointMass(1), [0], seed=0)
    with pytest.raises(InvalidParameter):
        choose_deg(g, "in", PointMass(1), [], seed=0)


@given(st.lists(st.integers(0, 6), min_size=1, max_size=8), st.integers(0, 2**32), st.integers(1, 9))
def test_choose_deg_distinct_and_monotone(degs, seed, point):
    # vertex i gets out-degree degs[i] through edges to a sink pool
    edges, sink = [], 100
    for v, d in enumerate(degs):
        for j in range(d):
            edges.append((v, sink + j, 0.1))
    g = make_graph(edges, n=len(degs))
    for p in (PointMass(point), TruncatedSupport(NegativeBinomial(2.0, 0.5), 12)):
        out = choose_deg(g, "out", p, list(range(len(degs))), seed=seed)
        assert len(set(out)) == len(out)
        assert all(o >= d for o, d in zip(out, degs))
        assert out[0] == degs[0]


# --- weight noising -------------------------------------------------------

def test_noising_argmin_matches_replay():
    g = connected_er(30, 5)
    eids = [e.id for e in g.edges]
    kde = EmpiricalKde.fit([e.weight for e in g.edges])
    out = weight_noising_trials(g, g, RuleProgram.CONTROL, eids, TWO, kde, 8, seed=11, stream=(1,))
    replay = [utility_sym_graphs(g, RuleProgram.CONTROL, g.with_weights(w), TWO)
              for w in noising_candidates(g, g, eids, kde, 8, 11, (1,))]
    assert out.scores == pytest.approx(replay, abs=0)
    assert out.best == int(np.argmin(replay))
    assert all(replay[out.best] <= s for s in replay)
    for e in g.edges:
        assert abs(out.graph.edge(e.id).weight - e.weight) > WEIGHT_TOLERANCE


def test_noising_m_one_and_bad_m():
    g = make_graph([(0, 1, 0.3), (1, 2, 0.7)])
    first = next(noising_candidates(g, g, [0, 1], Uniform01(), 1, 3, ()))
    assert weight_noising(g, g, RuleProgram.CONTROL, [0, 1], TWO, Uniform01(), 1, 3) == g.with_weights(first)
    with pytest.raises(InvalidParameter):
        weight_noising(g, g, RuleProgram.CONTROL, [0, 1], TWO, Uniform01(), 0, 3)


def test_noising_empty_subset_is_identity():
    g = make_graph([(0, 1, 0.3)])
    out = weight_noising_trials(g, g, RuleProgram.CONTROL, [], TWO, Uniform01(), 5, 0)
    assert out.graph is g and len(out.scores) == 1


def test_noising_rejects_foreign_edges():
    g = make_graph([(0, 1, 0.3)])
    with pytest.raises(InvalidParameter):
        list(noising_candidates(g, g, [7], Uniform01(), 1, 0))


# --- KLONE ----------------------------------------------------------------

def test_klone_vertex_bound_many_runs():
    runs = 0
    for s in range(50):
        n = 8 + (s * 37) % 93
        k = 2 + s % 4
        g = connected_er(n, 1000 + s)
        dist = TruncatedSupport(NegativeBinomial(1.5 + s % 3, 0.35), n)
        params = AnonymizationParams(k=k, m=1, seed=s, in_degree_dist=dist, out_degree_dist=dist)
        a = klone(g, RuleProgram.CONTROL, params)
        assert k * n <= a.released.num_vertices <= 2 * k * n + 1
        runs += 1
    assert runs == 50


def test_klone_no_synthetic_edge_inside_a_copy():
    g = connected_er(25, 2)
    a = klone(g, RuleProgram.CONTROL, AnonymizationParams(k=3, m=2, seed=4))
    tags = a.vertex_tags
    base = set(g.vertices)
    copied = set(a.trace["copied_edges"])
    assert copied
    for e in a.released.edges:
        if e.id not in a.synthetic_edges or e.id in copied:
            continue
        ts, td = tags.get(e.src), tags.get(e.dst)
        if ts is None or td is None or ts == ("minted",) or td == ("minted",):
            continue
        assert ts != td, f"synthetic edge {e} inside copy {ts}"
    assert base <= set(a.released.vertices)


def test_klone_labels_weights_and_augmentation():
    g = connected_er(20, 9)
    a = klone(g, RuleProgram.CONTROL, AnonymizationParams(k=2, m=3, seed=1))
    r = a.released
    assert not set(g.labels.values()) & set(r.labels.values())
    assert len(set(r.labels.values())) == r.num_vertices
    for e in g.edges:
        f = r.edge(e.id)
        assert (f.src, f.dst) == (e.src, e.dst)
        assert abs(f.weight - e.weight) > WEIGHT_TOLERANCE


def test_klone_requires_connected_graph():
    g = make_graph([(0, 1, 0.2), (2, 3, 0.2)])
    with pytest.raises(NotWeaklyConnected):
        klone(g, RuleProgram.CONTROL, AnonymizationParams(k=2))


def test_weight_programs_need_weights():
    g = make_graph([(0, 1), (1, 2)], weighted=False)
    with pytest.raises(UnsupportedProgram):
        klone(g, RuleProgram.CONTROL, AnonymizationParams(k=2))
    a = klone(g, RuleProgram.REACHABILITY, AnonymizationParams(k=2))
    assert not a.released.weighted


def test_params_validation():
    for kw in ({"k": 1}, {"k": 2, "x": 0}, {"k": 2, "m": 0}):
        with pytest.raises(InvalidParameter):
            AnonymizationParams(**kw)


def test_anonymize_is_deterministic(tmp_path):
    g = connected_er(30, 4)
    for algo, x in (("klone", None), ("kguard", 3)):
        p = AnonymizationParams(k=2, x=x, m=3, seed=21, queries=TWO)
        save_graph(anonymize(g, RuleProgram.CONTROL, p, algo).released, tmp_path / "a.csv")
        save_graph(anonymize(g, RuleProgram.CONTROL, p, algo).released, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


# --- KGUARD ---------------------------------------------------------------

@pytest.mark.parametrize("seed", [1, 2])
def test_kguard_retained_families(seed):
    g = assign_weights(scale_free(40, 3.0, seed=seed), "economic", seed)
    if not is_weakly_connected(g):
        pytest.skip("generator produced a disconnected graph")
    k, x = 3, 3
    a = kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=k, x=x, m=2, seed=seed))
    r = a.released
    for family in a.trace["retained"]:
        assert len(family) == k
        for s, t in itertools.combinations(family, 2):
            assert not set(s) & set(t)
        handles = [make_handle(r, m, RuleProgram.CONTROL) for m in family]
        for i, h in enumerate(handles[1:], 1):
            # positions are aligned, so the positional map must be an isomorphism
            phi = {u: v for u, v in zip(family[0], family[i])}
            assert verify_iso_map(handles[0], h, IsoMap(phi))
        for pos in range(x):
            xis = [sensitive_attributes(r, m[pos]) for m in family]
            for p, q in itertools.combinations(xis, 2):
                assert p.label != q.label and p.in_degree != q.in_degree and p.out_degree != q.out_degree


def test_kguard_reuses_existing_copies():
    g = make_graph([(0, 1, 0.6), (2, 3, 0.6), (4, 5, 0.6), (1, 2, 0.1), (3, 4, 0.1)])
    a = kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=3, x=2, m=2, seed=0))
    # the (0, 1) pattern has three disjoint occurrences already; none of it is cloned
    fam = next(f for f in a.trace["retained"] if (0, 1) in f)
    assert set(fam) == {(0, 1), (2, 3), (4, 5)}


def test_kguard_parameter_errors():
    g = make_graph([(0, 1, 0.3), (1, 2, 0.3)])
    with pytest.raises(InvalidParameter):
        kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=2, x=4))
    with pytest.raises(InvalidParameter):
        kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=4, x=3))
    with pytest.raises(InvalidParameter):
        kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=2))


def test_kguard_small_verifies():
    g = connected_er(25, 6)
    a = kguard(g, RuleProgram.CONTROL, AnonymizationParams(k=2, x=3, m=2, seed=3))
    rep = verify_kx_anonymisation(g, a, RuleProgram.CONTROL, 2, 3)
    assert rep.passed, rep.failed_items()


# --- split & merge --------------------------------------------------------

def two_halves():
    left = [(0, 1, 0.6), (1, 2, 0.3), (2, 0, 0.4), (2, 3, 0.2)]
    right = [(4, 5, 0.6), (5, 6, 0.3), (6, 4, 0.4), (6, 7, 0.2)]
    return make_graph(left + right + [(3, 4, 0.7)])


def test_split_drops_cut_edges_and_bridges():
    g = two_halves()
    cut_id = g.num_edges - 1
    a = split_and_merge(g, RuleProgram.CONTROL, AnonymizationParams(k=2, x=2, m=2, seed=0), "klone", 4)
    assert a.trace["cut_edges"] == [cut_id]
    assert not a.released.has_edge_id(cut_id)
    assert cut_id not in a.edge_map
    assert a.info["merge_bridges"] == 1
    assert not a.augmentation_intact
    assert is_weakly_connected(a.released)
    for res, part in zip(a.trace["part_results"], a.trace["parts"]):
        sub = induced_subgraph(g, part)
        sub = Graph(sub.vertices, [e for e in sub.edges if e.id != cut_id], sub.labels)
        assert verify_kx_anonymisation(sub, res, RuleProgram.CONTROL, 2, 2).passed


def test_split_without_cut_matches_direct_run(tmp_path):
    g = two_halves()
    p = AnonymizationParams(k=2, x=2, m=2, seed=5)
    direct = anonymize(g, RuleProgram.CONTROL, p, "klone")
    merged = split_and_merge(g, RuleProgram.CONTROL, p, "klone", g.num_vertices)
    save_graph(direct.released, tmp_path / "a.csv")
    save_graph(merged.released, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_split_rejects_small_parts():
    with pytest.raises(InvalidParameter):
        split_and_merge(two_halves(), RuleProgram.CONTROL, AnonymizationParams(k=2, x=3), "kguard", 2)


def test_bisect_respects_bound():
    g = connected_er(60, 8)
    parts = bisect_parts(g, 10, seed=0)
    assert all(len(p) <= 10 for p in parts)
    assert sorted(v for p in parts for v in p) == list(g.vertices)
