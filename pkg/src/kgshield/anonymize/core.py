"""Shared pipeline: noise originals, grow structure, relabel, noise synthetic edges."""

from __future__ import annotations

import time
from math import comb

from ..errors import InvalidParameter, NotWeaklyConnected, UnsupportedProgram
from ..graph import Graph, induced_subgraph, weakly_connected_components
from ..reasoner import RuleProgram
from ..utility import SymScorer
from ._work import WorkGraph
from .kguard import KguardBuilder
from .klone import KloneBuilder
from .noising import weight_noising_trials
from .params import (
    STAGE_BASE_NOISE,
    STAGE_FINAL_NOISE,
    STAGE_LABELS,
    STAGE_STRUCTURE,
    AnonymizationParams,
    AnonymizationResult,
    rng_for,
)

ALGORITHMS = ("klone", "kguard")


def _check_inputs(g: Graph, sigma: RuleProgram, params: AnonymizationParams, algo: str) -> None:
    if algo not in ALGORITHMS:
        raise InvalidParameter(f"unknown algorithm {algo!r}")
    if not g.weighted:
        if sigma.needs_weights:
            raise UnsupportedProgram(f"the {sigma.value} program needs edge weights")
        if any(q.needs_weights for q in params.queries):
            raise UnsupportedProgram("weight-dependent queries need a weighted graph")
    if algo == "kguard":
        if params.x is None:
            raise InvalidParameter("kguard needs x")
        if params.x > g.num_vertices:
            raise InvalidParameter(f"x={params.x} exceeds the vertex count {g.num_vertices}")


def anonymize(g: Graph, sigma: RuleProgram, params: AnonymizationParams, algo: str = "klone") -> AnonymizationResult:
    """Anonymize every weak component of ``g``; a component C uses x' = min(x, |C|)."""
    _check_inputs(g, sigma, params, algo)
    started = time.perf_counter()
    params = params.resolved(g)
    scorer = SymScorer(g, sigma, params.queries)

    base = weight_noising_trials(
        g, g, sigma, [e.id for e in g.edges], params.queries, params.weight_dist, params.m,
        params.seed, (STAGE_BASE_NOISE,), scorer,
    )
    g_noised = base.graph
    work = WorkGraph(g_noised)
    rng = rng_for(params.seed, STAGE_STRUCTURE)
    comps = [sorted(c) for c in weakly_connected_components(g)]
    comp_of = {v: i for i, c in enumerate(comps) for v in c}
    comp_edges: list[list[int]] = [[] for _ in comps]
    for e in g.edges:
        comp_edges[comp_of[e.src]].append(e.id)

    if algo == "klone":
        kb = KloneBuilder(work, params.k, params.in_degree_dist, params.out_degree_dist, rng)
        for i, comp in enumerate(comps):
            kb.add_component(comp, comp_edges[i], i)
        kept_weights = kb.base_edges
        extra = {"minted_vertices": len(kb.minted), "bridges": len(kb.bridges)}
        tags = dict(kb.copy_tag)
        tags.update({v: ("minted",) for v in kb.minted})
        trace = {"copied_edges": sorted(kb.base_edges - {e.id for e in g.edges}), "bridges": list(kb.bridges)}
    else:
        gb = KguardBuilder(work, g_noised, sigma, params.k, params.x, params.in_degree_dist,
                           params.out_degree_dist, rng)
        for comp in comps:
            gb.add_component(comp, induced_subgraph(g_noised, comp))
        gb.finish()
        kept_weights = gb.base_edges
        extra = {
            "buckets": sum(len(b) for b in gb.bucket_sets),
            "subgraphs": sum(len(b.subsets) for b in gb.bucket_sets),
            "clone_vertices": len(gb.clone_vertices),
            "minted_vertices": len(gb.minted),
            "bridges": len(gb.bridges),
        }
        tags = {v: ("clone",) for v in gb.clone_vertices}
        tags.update({v: ("minted",) for v in gb.minted})
        trace = {"retained": gb.retained, "cliques": gb.cliques, "targets": gb.targets,
                 "bucket_sets": gb.bucket_sets}

    fresh = params.fresh_labels.take(len(work.vertices), g.label_universe)
    perm = rng_for(params.seed, STAGE_LABELS).permutation(len(fresh))
    labels = {v: fresh[int(p)] for v, p in zip(sorted(work.vertices), perm)}
    a0 = work.freeze(labels)

    to_noise = [eid for eid in work.edges if eid not in kept_weights]
    final = weight_noising_trials(
        a0, g, sigma, to_noise, params.queries, params.weight_dist, params.m,
        params.seed, (STAGE_FINAL_NOISE,), scorer,
    )
    released = final.graph
    synthetic_vertices = frozenset(v for v in released.vertices if v not in g)
    synthetic_edges = frozenset(e.id for e in released.edges if not g.has_edge_id(e.id))
    info = {
        "algorithm": algo,
        "rules": sigma.value,
        "components": len(comps),
        "vertices_in": g.num_vertices,
        "edges_in": g.num_edges,
        "vertices_out": released.num_vertices,
        "edges_out": released.num_edges,
        "noising_scores_base": base.scores,
        "noising_scores_final": final.scores,
        "seconds": round(time.perf_counter() - started, 3),
        **extra,
    }
    result = AnonymizationResult(
        released=released,
        identity_map={v: v for v in g.vertices},
        edge_map={e.id: e.id for e in g.edges},
        synthetic_edges=synthetic_edges,
        synthetic_vertices=synthetic_vertices,
        augmentation_intact=True,
        info=info,
        vertex_tags=tags,
        trace=trace,
    )
    return result


def _require_connected(g: Graph) -> None:
    comps = weakly_connected_components(g)
    if len(comps) > 1:
        raise NotWeaklyConnected([len(c) for c in comps])


def klone(g: Graph, sigma: RuleProgram, params: AnonymizationParams) -> AnonymizationResult:
    """KLONE on a weakly connected graph; the release is safe for every NAG size."""
    _require_connected(g)
    return anonymize(g, sigma, params, "klone")


def kguard(g: Graph, sigma: RuleProgram, params: AnonymizationParams) -> AnonymizationResult:
    """KGUARD on a weakly connected graph for the configured NAG size x."""
    _check_inputs(g, sigma, params, "kguard")
    if params.k > comb(g.num_vertices, params.x):
        raise InvalidParameter(f"k={params.k} exceeds C(n, x)")
    _require_connected(g)
    return anonymize(g, sigma, params, "kguard")
