"""Utility, fidelity and privacy measures of a release, plus the anonymity verifier."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.stats import wasserstein_distance

from . import kernels
from .anonymize.params import AnonymizationResult
from .errors import InvalidParameter
from .graph import Graph
from .reasoner import Query, RuleProgram
from .subiso import GraphIndex, bucket_graph, connected_subset_array, vertex_keys
from .utility import utility_loss_graphs, utility_sym_graphs

NA = "n/a"

# exhaustive partner search is always run below this many candidate subsets,
# and with a node budget above it
EXACT_CANDIDATES = 20
SEARCH_BUDGET = 20000


def _release(a) -> tuple[Graph, Mapping[int, int] | None]:
    if isinstance(a, AnonymizationResult):
        return a.released, a.identity_map
    if isinstance(a, Graph):
        return a, None
    raise InvalidParameter(f"expected a Graph or AnonymizationResult, got {type(a).__name__}")


def _require_queries(queries: Sequence[Query]) -> list[Query]:
    queries = list(queries)
    if not queries:
        raise InvalidParameter("at least one query is needed")
    return queries


def utility_u(g: Graph, sigma: RuleProgram, a, queries: Sequence[Query]) -> float:
    """Mean fraction of each query's original answers missing from the release."""
    released, imap = _release(a)
    return utility_loss_graphs(g, sigma, released, _require_queries(queries), imap)


def utility_sym(g: Graph, sigma: RuleProgram, a, queries: Sequence[Query]) -> float:
    """Mean Jaccard distance between original and released answers."""
    released, imap = _release(a)
    return utility_sym_graphs(g, sigma, released, _require_queries(queries), imap)


def wasserstein1(samples_a, samples_b) -> float:
    """W1 between two empirical distributions on the real line."""
    a = np.asarray(list(samples_a), dtype=np.float64)
    b = np.asarray(list(samples_b), dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise InvalidParameter("wasserstein1 needs two nonempty samples")
    return float(wasserstein_distance(a, b))


def degree_samples(g: Graph) -> list[int]:
    """In- and out-degrees of every vertex pooled into one multiset."""
    return [g.in_degree(v) for v in g.vertices] + [g.out_degree(v) for v in g.vertices]


def weight_samples(g: Graph) -> list[float]:
    return [e.weight for e in g.edges]


def nodes_overhead(g: Graph, a) -> float:
    released, _ = _release(a)
    if g.num_vertices == 0:
        raise InvalidParameter("the original graph has no vertices")
    return 100.0 * (released.num_vertices - g.num_vertices) / g.num_vertices


def klone_overhead_bound(n: int, k: int) -> float:
    """Largest overhead KLONE can produce: at most 2kn+1 released vertices."""
    return 100.0 * (2 * k * n + 1 - n) / n


# --- per-NAG check --------------------------------------------------------

class _ReleaseIndex:
    """Connected x-subsets of the release, bucketed, with rep automorphisms on demand."""

    def __init__(self, released: Graph, sigma: RuleProgram, x: int):
        self.graph = released
        self.x = x
        idx = GraphIndex(released)
        self.ids = idx.ids
        self.bs = bucket_graph(released, x, sigma, idx)
        self.row_of = {tuple(r): t for t, r in enumerate(self.bs.subsets.tolist())}
        self.din = np.asarray([released.in_degree(int(v)) for v in self.ids], dtype=np.int64)
        self.dout = np.asarray([released.out_degree(int(v)) for v in self.ids], dtype=np.int64)
        self.pos_of = {int(v): i for i, v in enumerate(self.ids)}
        self._auts: dict[int, np.ndarray] = {}

    def automorphisms(self, b: int) -> np.ndarray:
        if b not in self._auts:
            r = int(self.bs.members[b][0])
            c = np.ascontiguousarray(self.bs.codes[r], dtype=np.int32)
            vk = vertex_keys(c[None])[0]
            self._auts[b] = np.asarray(kernels.all_matches(c, c, vk, vk), dtype=np.int64)
        return self._auts[b]


@dataclass
class NagOutcome:
    nag: tuple[int, ...]
    passed: bool
    reason: str = ""
    partners: list[tuple[int, ...]] = field(default_factory=list)


def _diverse_rows(da, db, oa, ob) -> np.ndarray:
    return np.all((da != db) & (oa != ob), axis=-1)


def _search(compatible, n: int, need: int, budget: int | None) -> list[int] | None:
    """Pick ``need`` of ``n`` candidates, pairwise compatible: greedy first, then backtracking."""
    chosen: list[int] = []
    for i in range(n):
        if all(compatible(i, j) for j in chosen):
            chosen.append(i)
            if len(chosen) == need:
                return chosen
    nodes = 0

    def dfs(start, chosen):
        nonlocal nodes
        if len(chosen) == need:
            return list(chosen)
        for i in range(start, n - (need - len(chosen)) + 1):
            nodes += 1
            if budget is not None and nodes > budget:
                return None
            if all(compatible(i, j) for j in chosen):
                chosen.append(i)
                got = dfs(i + 1, chosen)
                if got is not None:
                    return got
                chosen.pop()
        return None

    return dfs(0, [])


def check_nag(rix: _ReleaseIndex, nag: Sequence[int], k: int) -> NagOutcome:
    """Does the release hold k-1 disjoint, diverse, isomorphic companions of A[nag]?"""
    nag = tuple(sorted(int(v) for v in nag))
    if k <= 1:
        return NagOutcome(nag, True)
    try:
        rows = [rix.pos_of[v] for v in nag]
    except KeyError:
        return NagOutcome(nag, False, "NAG vertices missing from the release")
    t = rix.row_of.get(nag)
    if t is None:
        return NagOutcome(nag, False, "NAG is not weakly connected in the release")
    bs = rix.bs
    b = int(bs.bucket_of[t])
    members = bs.members[b]
    own = set(rows)
    cand = np.asarray([int(m) for m in members if own.isdisjoint(bs.subsets[m].tolist())], dtype=np.int64)
    if len(cand) < k - 1:
        return NagOutcome(nag, False, f"only {len(cand)} disjoint isomorphic subgraphs")

    auts = rix.automorphisms(b)
    cand_pos = np.searchsorted(rix.ids, bs.subsets[cand])
    # inv[c, r]: local index of the vertex of candidate c sitting at representative position r
    inv = np.empty((len(cand), rix.x), dtype=np.int64)
    np.put_along_axis(inv, bs.to_rep[cand], np.broadcast_to(np.arange(rix.x), inv.shape), axis=1)
    via = auts[:, bs.to_rep[t]]                        # (A, x): X1 index -> rep position
    local = inv[:, via].transpose(1, 0, 2)             # (A, C, x): X1 index -> candidate index
    mapped = np.take_along_axis(np.broadcast_to(cand_pos, local.shape), local, axis=2).reshape(-1, rix.x)
    groups = np.tile(np.arange(len(cand)), len(auts))
    din, dout = rix.din[mapped], rix.dout[mapped]
    base_in, base_out = rix.din[rows], rix.dout[rows]
    keep = _diverse_rows(din, base_in[None], dout, base_out[None])
    if not keep.any():
        return NagOutcome(nag, False, "no isomorphic subgraph has diverse attributes")
    mapped, groups, din, dout = mapped[keep], groups[keep], din[keep], dout[keep]
    # order candidates by subset so the greedy pass tries every map of one subset together
    order = np.argsort(groups, kind="stable")
    mapped, groups, din, dout = mapped[order], groups[order], din[order], dout[order]
    if len(np.unique(groups)) < k - 1:
        return NagOutcome(nag, False, "too few diverse isomorphic subgraphs")
    sets = [set(r) for r in cand_pos.tolist()]

    def compatible(i, j):
        return (sets[groups[i]].isdisjoint(sets[groups[j]])
                and bool(np.all((din[i] != din[j]) & (dout[i] != dout[j]))))

    budget = None if len(cand) <= EXACT_CANDIDATES else SEARCH_BUDGET
    picked = _search(compatible, len(groups), k - 1, budget)
    if picked is None:
        return NagOutcome(nag, False, "no disjoint, pairwise diverse family of companions")
    partners = [tuple(int(rix.ids[p]) for p in mapped[i]) for i in picked]
    return NagOutcome(nag, True, partners=partners)


def _nag_list(g: Graph, x: int, identity_map: Mapping[int, int] | None) -> list[tuple[int, ...]]:
    rows = connected_subset_array(g, x)
    out = [tuple(int(v) for v in r) for r in rows.tolist()]
    if identity_map is not None:
        out = [tuple(identity_map.get(v, -1) for v in r) for r in out]
    return out


_WORKER_INDEX: _ReleaseIndex | None = None


def _worker_init(released, sigma, x):
    global _WORKER_INDEX
    _WORKER_INDEX = _ReleaseIndex(released, sigma, x)


def _worker_check(args):
    nags, k = args
    return [check_nag(_WORKER_INDEX, n, k) for n in nags]


def _check_all(released: Graph, sigma: RuleProgram, x: int, k: int, nags: list, workers: int) -> list[NagOutcome]:
    if workers <= 1 or len(nags) < 2:
        rix = _ReleaseIndex(released, sigma, x)
        return [check_nag(rix, n, k) for n in nags]
    chunk = max(1, math.ceil(len(nags) / (4 * workers)))
    jobs = [(nags[i:i + chunk], k) for i in range(0, len(nags), chunk)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                             initargs=(released, sigma, x)) as pool:
        return [o for part in pool.map(_worker_check, jobs) for o in part]


def _check_x(g: Graph, x: int) -> None:
    if not 1 <= x <= g.num_vertices:
        raise InvalidParameter(f"x must lie in [1, {g.num_vertices}], got {x}")


def delta_anonymity(g: Graph, a, sigma: RuleProgram, k: int, x: int, sample: int | None = None,
                    seed: int = 0, workers: int = 1) -> float:
    """Fraction of the size-x NAGs of ``g`` that are hidden among k diverse look-alikes.

    With ``sample`` set, the fraction is estimated on that many NAGs drawn
    uniformly with replacement.
    """
    _check_x(g, x)
    released, imap = _release(a)
    nags = _nag_list(g, x, imap)
    if not nags:
        return 1.0
    if sample is not None:
        if sample < 1:
            raise InvalidParameter("sample must be positive")
        picks = np.random.default_rng(seed).integers(0, len(nags), size=sample)
        nags = [nags[int(i)] for i in picks]
    outcomes = _check_all(released, sigma, x, k, nags, workers)
    return sum(o.passed for o in outcomes) / len(outcomes)


# --- full verification ----------------------------------------------------

@dataclass
class ItemResult:
    passed: bool | None  # None: not applicable
    detail: str = ""
    counterexamples: list = field(default_factory=list)


@dataclass
class VerificationReport:
    k: int
    x: int
    augmentation: ItemResult
    labels_disjoint: ItemResult
    weights_changed: ItemResult
    isomorphic_copies: ItemResult
    nags_checked: int = 0
    nags_passed: int = 0

    @property
    def items(self) -> dict[str, ItemResult]:
        return {
            "augmentation": self.augmentation,
            "labels_disjoint": self.labels_disjoint,
            "weights_changed": self.weights_changed,
            "isomorphic_copies": self.isomorphic_copies,
        }

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.items.values())

    def failed_items(self) -> list[str]:
        return [name for name, r in self.items.items() if r.passed is False]

    def to_dict(self) -> dict[str, Any]:
        d = {name: {"passed": NA if r.passed is None else r.passed, "detail": r.detail,
                    "counterexamples": [list(c) if isinstance(c, tuple) else c for c in r.counterexamples[:10]]}
             for name, r in self.items.items()}
        d.update(k=self.k, x=self.x, passed=self.passed, nags_checked=self.nags_checked,
                 nags_passed=self.nags_passed)
        return d


def _check_augmentation(g: Graph, released: Graph, imap, emap) -> ItemResult:
    bad: list = []
    for v in g.vertices:
        av = imap.get(v)
        if av is None or av not in released:
            bad.append(("vertex", v))
    for e in g.edges:
        aid = emap.get(e.id)
        if aid is None or not released.has_edge_id(aid):
            bad.append(("edge", e.id))
            continue
        ae = released.edge(aid)
        if (ae.src, ae.dst) != (imap.get(e.src), imap.get(e.dst)):
            bad.append(("incidence", e.id))
    return ItemResult(not bad, f"{len(bad)} missing or rewired elements", bad)


def _check_labels(g: Graph, released: Graph) -> ItemResult:
    shared = sorted(g.label_universe & released.label_universe)
    return ItemResult(not shared, f"{len(shared)} shared labels", shared)


def _check_weights(g: Graph, released: Graph, emap) -> ItemResult:
    if not g.weighted:
        return ItemResult(None, "unweighted graph")
    bad = []
    for e in g.edges:
        aid = emap.get(e.id)
        if aid is not None and released.has_edge_id(aid) and released.edge(aid).weight == e.weight:
            bad.append(e.id)
    return ItemResult(not bad, f"{len(bad)} original edges keep their weight", bad)


def verify_kx_anonymisation(g: Graph, a, sigma: RuleProgram, k: int, x: int,
                            workers: int = 1) -> VerificationReport:
    """Check every condition of a (k, x)-isomorphism anonymisation; failures are reported."""
    _check_x(g, x)
    released, imap = _release(a)
    if imap is None:
        imap = {v: v for v in g.vertices}
        emap = {e.id: e.id for e in g.edges}
    else:
        emap = a.edge_map
    item1 = _check_augmentation(g, released, imap, emap)
    item2 = _check_labels(g, released)
    item3 = _check_weights(g, released, emap)
    nags = _nag_list(g, x, imap)
    outcomes = _check_all(released, sigma, x, k, nags, workers) if nags else []
    failed = [(o.nag, o.reason) for o in outcomes if not o.passed]
    item4 = ItemResult(not failed, f"{len(outcomes) - len(failed)}/{len(outcomes)} NAGs covered", failed)
    return VerificationReport(k, x, item1, item2, item3, item4, len(outcomes), len(outcomes) - len(failed))


# --- aggregate report -----------------------------------------------------

@dataclass
class MetricsReport:
    utility_u: float | str
    utility_sym: float | str
    wasserstein_degree: float
    wasserstein_weight: float | str
    nodes_overhead_pct: float
    delta_anonymity: float | str
    augmentation_intact: bool

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        return {
            "utility_u": d["utility_u"],
            "utility_sym": d["utility_sym"],
            "w1_degree": d["wasserstein_degree"],
            "w1_weight": d["wasserstein_weight"],
            "nodes_overhead_pct": d["nodes_overhead_pct"],
            "delta_anonymity": d["delta_anonymity"],
            "augmentation_intact": d["augmentation_intact"],
        }


def evaluate(g: Graph, a, sigma: RuleProgram, queries: Sequence[Query] = (), k: int | None = None,
             x: int | None = None, sample: int | None = None, seed: int = 0, workers: int = 1) -> MetricsReport:
    released, imap = _release(a)
    queries = list(queries)
    if queries:
        uu = utility_u(g, sigma, a, queries)
        us = utility_sym(g, sigma, a, queries)
    else:
        uu = us = NA
    w_deg = wasserstein1(degree_samples(g), degree_samples(released)) if g.num_vertices and released.num_vertices else 0.0
    if g.weighted and released.weighted and g.num_edges and released.num_edges:
        w_wt = wasserstein1(weight_samples(g), weight_samples(released))
    else:
        w_wt = NA
    delta = delta_anonymity(g, a, sigma, k, x, sample, seed, workers) if k and x else NA
    intact = a.augmentation_intact if isinstance(a, AnonymizationResult) else True
    return MetricsReport(uu, us, w_deg, w_wt, nodes_overhead(g, a), delta, intact)
